#include "retseg/data/registry.hpp"

#include <sstream>

namespace retseg::data {

std::map<DatasetId, ExpectedCounts> expected_registry() {
    std::map<DatasetId, ExpectedCounts> reg;
    reg[DatasetId::rabbani_i] = {/*fundus=*/148, /*oct=*/4241, /*train_fundus=*/37, /*train_oct=*/1061};
    reg[DatasetId::rabbani_ii] = {100, 12800, 0, 0};
    reg[DatasetId::duke_i] = {0, 38400, 0, 300};
    reg[DatasetId::duke_ii] = {0, 610, 0, 305};
    reg[DatasetId::duke_iii] = {0, 3231, 0, 3048};
    reg[DatasetId::biomisa] = {115, 5324, 29, 1299};
    reg[DatasetId::zhang] = {0, 109309, 0, 108309};
    return reg;
}

AuditReport audit_splits(const DatasetManifest& manifest) {
    const auto registry = expected_registry();
    const auto& actual = manifest.dataset_counts();

    AuditReport report;
    bool clean = true;
    for (const auto& [id, exp] : registry) {
        SplitCounts act;
        if (auto it = actual.find(id); it != actual.end()) act = it->second;
        CountDelta d;
        d.fundus = act.fundus - exp.fundus;
        d.oct = act.oct - exp.oct;
        d.train_fundus = act.train_fundus - exp.train_fundus;
        d.train_oct = act.train_oct - exp.train_oct;
        d.test_fundus = act.test_fundus - exp.test_fundus();
        d.test_oct = act.test_oct - exp.test_oct();
        clean = clean && d.clean();
        report.per_dataset[id] = d;

        report.expected_totals.fundus += exp.fundus;
        report.expected_totals.oct += exp.oct;
        report.expected_totals.train_fundus += exp.train_fundus;
        report.expected_totals.train_oct += exp.train_oct;
        report.expected_totals.test_fundus += exp.test_fundus();
        report.expected_totals.test_oct += exp.test_oct();
        report.expected_totals.train += exp.train_fundus + exp.train_oct;
        report.expected_totals.test += exp.test_fundus() + exp.test_oct();
    }
    // Datasets present in the manifest but absent from the registry are audit
    // failures too (synthetic records must not leak into a real-data audit).
    for (const auto& [id, act] : actual) {
        if (registry.count(id)) continue;
        CountDelta d;
        d.fundus = act.fundus;
        d.oct = act.oct;
        d.train_fundus = act.train_fundus;
        d.train_oct = act.train_oct;
        d.test_fundus = act.test_fundus;
        d.test_oct = act.test_oct;
        clean = false;
        report.per_dataset[id] = d;
    }
    report.actual_totals = manifest.totals();
    report.passed = clean;
    return report;
}

std::string AuditReport::describe() const {
    std::ostringstream os;
    os << "dataset\tfundus\toct\ttrain_fundus\ttrain_oct\ttest_fundus\ttest_oct\tstatus\n";
    for (const auto& [id, d] : per_dataset) {
        os << to_string(id) << "\t" << d.fundus << "\t" << d.oct << "\t" << d.train_fundus << "\t"
           << d.train_oct << "\t" << d.test_fundus << "\t" << d.test_oct << "\t"
           << (d.clean() ? "ok" : "MISMATCH") << "\n";
    }
    os << "totals\tactual fundus " << actual_totals.fundus << " (expected " << expected_totals.fundus
       << "), actual oct " << actual_totals.oct << " (expected " << expected_totals.oct
       << "), actual test fundus " << actual_totals.test_fundus << " (expected "
       << expected_totals.test_fundus << "), actual test oct " << actual_totals.test_oct
       << " (expected " << expected_totals.test_oct << ")\n";
    os << "audit " << (passed ? "PASS" : "FAIL") << "\n";
    return os.str();
}

}  // namespace retseg::data
