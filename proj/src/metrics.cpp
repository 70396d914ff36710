#include "malflows/metrics.hpp"

#include "malflows/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>

namespace malflows {

using nlohmann::json;

std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                pos_rank_sum += avg_rank;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) return std::nullopt;
    const double p = static_cast<double>(pos);
    return (pos_rank_sum - p * (p + 1) / 2.0) / (p * static_cast<double>(neg));
}

MetricReport compute_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
    if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
    MetricReport r;
    auto& c = r.confusion;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool truth = labels[i] == 1;
        if (pred && truth) ++c.tp;
        else if (pred) ++c.fp;
        else if (truth) ++c.fn;
        else ++c.tn;
    }
    const double n = static_cast<double>(scores.size());
    if (n > 0) r.accuracy = static_cast<double>(c.tp + c.tn) / n;
    if (c.tp + c.fp == 0) {
        r.warnings.push_back("no positive predictions: precision reported as 0");
    } else {
        r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    }
    if (c.tp + c.fn == 0) {
        r.warnings.push_back("no malware samples: recall reported as 0");
    } else {
        r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    }
    if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
    r.roc_auc = roc_auc(scores, labels);
    if (!r.roc_auc) r.warnings.push_back("only one class present: ROC-AUC undefined");
    return r;
}

double aut(std::span<const double> series) {
    if (series.size() < 2) throw Error("AUT needs at least two time slots");
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < series.size(); ++k) sum += (series[k + 1] + series[k]) / 2.0;
    return sum / static_cast<double>(series.size() - 1);
}

PeriodReport evaluate_by_period(std::span<const double> scores, std::span<const int> labels,
                                std::span<const std::string> periods, double threshold) {
    if (scores.size() != labels.size() || scores.size() != periods.size()) {
        throw Error("scores, labels and periods differ in length");
    }
    std::map<std::string, std::vector<std::size_t>> slots;
    for (std::size_t i = 0; i < periods.size(); ++i) {
        if (periods[i].empty()) throw SchemaError("sample without a period cannot be slotted");
        slots[periods[i]].push_back(i);
    }
    PeriodReport out;
    std::vector<double> acc, prec, rec, f1;
    for (const auto& [period, idx] : slots) {
        std::vector<double> s;
        std::vector<int> l;
        for (auto i : idx) {
            s.push_back(scores[i]);
            l.push_back(labels[i]);
        }
        out.periods.push_back(period);
        out.reports.push_back(compute_metrics(s, l, threshold));
        acc.push_back(out.reports.back().accuracy);
        prec.push_back(out.reports.back().precision);
        rec.push_back(out.reports.back().recall);
        f1.push_back(out.reports.back().f1);
    }
    if (out.periods.size() >= 2) {
        out.aut["accuracy"] = aut(acc);
        out.aut["precision"] = aut(prec);
        out.aut["recall"] = aut(rec);
        out.aut["f1"] = aut(f1);
    }
    return out;
}

namespace {

json report_json(const MetricReport& r) {
    json j;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["roc_auc"] = r.roc_auc ? json(*r.roc_auc) : json(nullptr);
    j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}};
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace

std::string metrics_to_json(const MetricReport& report, const std::optional<PeriodReport>& by_period,
                            const std::string& meta_json) {
    json j = report_json(report);
    if (by_period) {
        json slots = json::array();
        for (std::size_t i = 0; i < by_period->periods.size(); ++i) {
            json s = report_json(by_period->reports[i]);
            s["period"] = by_period->periods[i];
            slots.push_back(std::move(s));
        }
        j["by_period"] = std::move(slots);
        j["aut"] = by_period->aut;
        if (by_period->aut.empty()) j["aut"] = nullptr;
    }
    j["meta"] = json::parse(meta_json);
    return j.dump(2) + "\n";
}

}  // namespace malflows
