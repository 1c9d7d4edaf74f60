#include "retseg/report/compare.hpp"

#include <cstdio>

#include "retseg/core/types.hpp"

namespace retseg::report {

namespace {

std::optional<double> metric_value(const metrics::MetricReport& report,
                                   const std::string& metric) {
    if (metric == "tpr") return report.micro.tpr;
    if (metric == "ppv") return report.micro.ppv;
    if (metric == "f1") return report.micro.f1;
    if (metric == "mean_dice") return report.mean_dice;
    if (metric == "mean_iou") return report.mean_iou;
    if (metric == "tn") return report.tn;
    throw ValidationError("unknown metric '" + metric + "'");
}

double require(const std::optional<double>& v, const std::string& name,
               const std::string& metric) {
    if (!v.has_value()) {
        throw ValidationError("report '" + name + "' does not carry metric '" + metric + "'");
    }
    return *v;
}

}  // namespace

DeltaSummary compare(const std::string& name_a, const metrics::MetricReport& a,
                     const std::string& name_b, const metrics::MetricReport& b,
                     const std::string& metric) {
    DeltaSummary summary;
    summary.metric = metric;
    summary.value_a = require(metric_value(a, metric), name_a, metric);
    summary.value_b = require(metric_value(b, metric), name_b, metric);
    summary.absolute = summary.value_a - summary.value_b;

    char buf[160];
    if (summary.absolute == 0.0) {
        summary.relative_pct = 0.0;
        std::snprintf(buf, sizeof buf, "%s matches %s on %s", name_a.c_str(), name_b.c_str(),
                      metric.c_str());
    } else {
        const bool a_leads = summary.absolute > 0.0;
        const double leader = a_leads ? summary.value_a : summary.value_b;
        const double other = a_leads ? summary.value_b : summary.value_a;
        const double pct = 100.0 * metrics::relative_improvement(leader, other);
        summary.relative_pct = a_leads ? pct : -pct;
        std::snprintf(buf, sizeof buf, "%s leads %s by %.2f%% on %s",
                      (a_leads ? name_a : name_b).c_str(), (a_leads ? name_b : name_a).c_str(),
                      pct, metric.c_str());
    }
    summary.phrase = buf;
    return summary;
}

}  // namespace retseg::report
