#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace malflows {

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

struct MetricReport {
    Confusion confusion;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> roc_auc;  // absent when only one class is present
    std::vector<std::string> warnings;
};

// Malware is the positive class; a score >= threshold predicts malware.
MetricReport compute_metrics(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

// Mann-Whitney rank statistic with average ranks for tied scores.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels);

// Trapezoidal average of a metric over N >= 2 consecutive time slots.
double aut(std::span<const double> series);

struct PeriodReport {
    std::vector<std::string> periods;  // ascending
    std::vector<MetricReport> reports;
    std::map<std::string, double> aut;  // accuracy, precision, recall, f1
};

PeriodReport evaluate_by_period(std::span<const double> scores, std::span<const int> labels,
                                std::span<const std::string> periods, double threshold = 0.5);

std::string metrics_to_json(const MetricReport& report, const std::optional<PeriodReport>& by_period = std::nullopt,
                            const std::string& meta_json = "{}");

}  // namespace malflows
