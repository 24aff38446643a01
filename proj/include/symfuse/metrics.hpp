#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace symfuse {

/// Binary confusion counts with the derived evaluation metrics.
/// macro F1 is the unweighted mean of per-class F1; balanced accuracy is the
/// unweighted mean of per-class recall.
struct Metrics {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    bool single_class_data = false; // metrics degenerate, zero-filled where undefined

    long total() const { return tp + fp + tn + fn; }

    static Metrics from_predictions(const std::vector<int>& truth, const std::vector<int>& pred) {
        Metrics m;
        bool has_pos = false, has_neg = false;
        for (size_t i = 0; i < truth.size(); ++i) {
            (truth[i] == 1 ? has_pos : has_neg) = true;
            if (truth[i] == 1 && pred[i] == 1) ++m.tp;
            else if (truth[i] == 1 && pred[i] == 0) ++m.fn;
            else if (truth[i] == 0 && pred[i] == 1) ++m.fp;
            else ++m.tn;
        }
        m.single_class_data = !(has_pos && has_neg);
        return m;
    }

    double f1_positive() const {
        const double denom = 2.0 * tp + fp + fn;
        return denom > 0.0 ? 2.0 * tp / denom : 0.0;
    }
    double f1_negative() const {
        const double denom = 2.0 * tn + fn + fp;
        return denom > 0.0 ? 2.0 * tn / denom : 0.0;
    }
    double macro_f1() const { return 0.5 * (f1_positive() + f1_negative()); }

    double recall_positive() const {
        return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    }
    double recall_negative() const {
        return tn + fp > 0 ? static_cast<double>(tn) / static_cast<double>(tn + fp) : 0.0;
    }
    double balanced_accuracy() const { return 0.5 * (recall_positive() + recall_negative()); }
};

inline nlohmann::ordered_json metrics_to_json(const Metrics& m) {
    return {{"macro_f1", m.macro_f1()},
            {"balanced_accuracy", m.balanced_accuracy()},
            {"confusion", {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}}},
            {"single_class_data", m.single_class_data}};
}

} // namespace symfuse
