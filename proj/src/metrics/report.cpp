#include "retseg/metrics/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "retseg/core/kv_config.hpp"

namespace retseg::metrics {

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

namespace {

std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : "undefined";
}

std::optional<double> parse_optional(const std::string& text) {
    if (text == "undefined") return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') {
        throw std::runtime_error("metric report: bad numeric value '" + text + "'");
    }
    return v;
}

}  // namespace

MetricReport MetricReport::from_accumulator(const ConfusionAccumulator& acc, long scan_count) {
    MetricReport r;
    r.scan_count = scan_count;
    r.pixel_count = acc.total_pixels();
    r.dice_per_class.resize(kNumClasses);
    r.iou_per_class.resize(kNumClasses);
    for (int c = 0; c < kNumClasses; ++c) {
        r.dice_per_class[static_cast<std::size_t>(c)] = dice(acc, c);
        r.iou_per_class[static_cast<std::size_t>(c)] = iou(acc, c);
    }
    bool any_lesion = false;
    for (int c = 1; c < kNumClasses; ++c) {
        any_lesion = any_lesion || r.dice_per_class[static_cast<std::size_t>(c)].has_value();
    }
    if (any_lesion) {
        r.mean_dice = mean_over_lesions(r.dice_per_class);
        r.mean_iou = mean_over_lesions(r.iou_per_class);
    }
    r.micro = micro_pixel_metrics(acc);
    r.tn = tn_rate(acc);
    return r;
}

std::string MetricReport::serialize() const {
    KvConfig kv;
    kv.set("aggregation", aggregation);
    kv.set("scans", std::to_string(scan_count));
    kv.set("pixels", std::to_string(pixel_count));
    for (int c = 0; c < kNumClasses; ++c) {
        kv.set("dice." + std::to_string(c),
               format_optional(c < static_cast<int>(dice_per_class.size())
                                   ? dice_per_class[static_cast<std::size_t>(c)]
                                   : std::nullopt));
    }
    for (int c = 0; c < kNumClasses; ++c) {
        kv.set("iou." + std::to_string(c),
               format_optional(c < static_cast<int>(iou_per_class.size())
                                   ? iou_per_class[static_cast<std::size_t>(c)]
                                   : std::nullopt));
    }
    kv.set("mean_dice", format_optional(mean_dice));
    kv.set("mean_iou", format_optional(mean_iou));
    kv.set("tpr", format_optional(micro.tpr));
    kv.set("ppv", format_optional(micro.ppv));
    kv.set("f1", format_optional(micro.f1));
    kv.set("tn_rate", format_optional(tn));
    return kv.serialize();
}

MetricReport MetricReport::parse(const std::string& text) {
    const KvConfig kv = KvConfig::parse_text(text);
    MetricReport r;
    r.aggregation = kv.require("aggregation");
    r.scan_count = std::stol(kv.require("scans"));
    r.pixel_count = std::stoll(kv.require("pixels"));
    r.dice_per_class.resize(kNumClasses);
    r.iou_per_class.resize(kNumClasses);
    for (int c = 0; c < kNumClasses; ++c) {
        r.dice_per_class[static_cast<std::size_t>(c)] =
            parse_optional(kv.require("dice." + std::to_string(c)));
        r.iou_per_class[static_cast<std::size_t>(c)] =
            parse_optional(kv.require("iou." + std::to_string(c)));
    }
    r.mean_dice = parse_optional(kv.require("mean_dice"));
    r.mean_iou = parse_optional(kv.require("mean_iou"));
    r.micro.tpr = parse_optional(kv.require("tpr"));
    r.micro.ppv = parse_optional(kv.require("ppv"));
    r.micro.f1 = parse_optional(kv.require("f1"));
    r.tn = parse_optional(kv.require("tn_rate"));
    return r;
}

}  // namespace retseg::metrics
