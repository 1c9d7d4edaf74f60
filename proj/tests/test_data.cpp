#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "retseg/core/mask.hpp"
#include "retseg/data/groups.hpp"
#include "retseg/data/manifest.hpp"
#include "retseg/data/registry.hpp"
#include "retseg/data/synth.hpp"

using namespace retseg;
using namespace retseg::data;

namespace {

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string write_text(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << text;
    return path.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("manifest load parses records and derives counts") {
    const std::string path = write_text("retseg_manifest_ok.txt",
                                        "# scan_id|dataset_id|modality|image_ref|mask_ref|split|pathology\n"
                                        "a|zhang|oct|a.pgm|a_mask.pgm|train|cnv\n"
                                        "b|zhang|oct|b.pgm||test|healthy\n"
                                        "c|biomisa|fundus|c.ppm|c_mask.pgm|test|me\n");
    const DatasetManifest m = load_manifest(path);
    REQUIRE(m.records().size() == 3);
    CHECK(m.records()[1].healthy());
    CHECK(!m.records()[0].healthy());
    const auto& zhang = m.dataset_counts().at(DatasetId::zhang);
    CHECK(zhang.train == 1);
    CHECK(zhang.test == 1);
    CHECK(zhang.oct == 2);
    CHECK(m.totals().fundus == 1);
    CHECK(m.totals().test == 2);
    CHECK(m.split_records(Split::test).size() == 2);
    std::filesystem::remove(path);
}

TEST_CASE("manifest save/load round-trips byte-stably") {
    const std::string src = write_text("retseg_manifest_rt_src.txt",
                                       "a|duke-i|oct|a.pgm|am.pgm|train|dme\n"
                                       "b|rabbani-ii|fundus|b.ppm||test|healthy\n");
    const DatasetManifest m = load_manifest(src);
    const std::string out1 = write_text("retseg_manifest_rt1.txt", "");
    save_manifest(m, out1);
    const DatasetManifest back = load_manifest(out1);
    const std::string out2 = write_text("retseg_manifest_rt2.txt", "");
    save_manifest(back, out2);
    CHECK(read_file(out1) == read_file(out2));
    CHECK(back.records().size() == 2);
    for (const auto& p : {src, out1, out2}) std::filesystem::remove(p);
}

TEST_CASE("manifest parse errors carry line numbers") {
    const std::string dup = write_text("retseg_manifest_dup.txt",
                                       "a|zhang|oct|a.pgm||train|x\n"
                                       "a|zhang|oct|b.pgm||train|x\n");
    CHECK_THROWS_WITH_AS((void)load_manifest(dup), doctest::Contains("duplicate"), ValidationError);

    const std::string unk = write_text("retseg_manifest_unk.txt",
                                       "a|zhang|oct|a.pgm||train|x\n"
                                       "b|kermany|oct|b.pgm||train|x\n");
    CHECK_THROWS_WITH_AS((void)load_manifest(unk), doctest::Contains(":2"), ValidationError);

    const std::string fields = write_text("retseg_manifest_fields.txt", "a|zhang|oct\n");
    CHECK_THROWS_WITH_AS((void)load_manifest(fields), doctest::Contains("7"), ValidationError);

    CHECK_THROWS_AS((void)load_manifest("/nonexistent/manifest.txt"), ValidationError);
    for (const auto& p : {dup, unk, fields}) std::filesystem::remove(p);
}

TEST_CASE("expected registry carries the published counts") {
    const auto reg = expected_registry();
    REQUIRE(reg.size() == 7);
    CHECK(reg.at(DatasetId::rabbani_i).oct == 4241);
    CHECK(reg.at(DatasetId::rabbani_i).fundus == 148);
    CHECK(reg.at(DatasetId::rabbani_i).train_oct == 1061);
    CHECK(reg.at(DatasetId::rabbani_i).train_fundus == 37);
    CHECK(reg.at(DatasetId::rabbani_ii).oct == 12800);
    CHECK(reg.at(DatasetId::rabbani_ii).train_oct == 0);
    CHECK(reg.at(DatasetId::duke_i).oct == 38400);
    CHECK(reg.at(DatasetId::duke_i).train_oct == 300);
    CHECK(reg.at(DatasetId::duke_ii).oct == 610);
    CHECK(reg.at(DatasetId::duke_ii).train_oct == 305);
    CHECK(reg.at(DatasetId::duke_iii).oct == 3231);
    CHECK(reg.at(DatasetId::duke_iii).train_oct == 3048);
    CHECK(reg.at(DatasetId::duke_iii).test_oct() == 183);
    CHECK(reg.at(DatasetId::biomisa).oct == 5324);
    CHECK(reg.at(DatasetId::biomisa).fundus == 115);
    CHECK(reg.at(DatasetId::biomisa).train_oct == 1299);
    CHECK(reg.at(DatasetId::biomisa).train_fundus == 29);
    CHECK(reg.at(DatasetId::zhang).oct == 109309);
    CHECK(reg.at(DatasetId::zhang).train_oct == 108309);
    CHECK(reg.at(DatasetId::zhang).test_oct() == 1000);

    long fundus = 0, oct = 0, test_fundus = 0, test_oct = 0;
    for (const auto& [id, e] : reg) {
        fundus += e.fundus;
        oct += e.oct;
        test_fundus += e.test_fundus();
        test_oct += e.test_oct();
    }
    CHECK(fundus == 363);
    CHECK(oct == 173915);
    CHECK(test_fundus == 297);
    CHECK(test_oct == 59593);
}

TEST_CASE("audit passes a conforming manifest and recovers the totals") {
    const DatasetManifest m = retseg::testing::conforming_manifest();
    const AuditReport report = audit_splits(m);
    CHECK(report.passed);
    for (const auto& [id, d] : report.per_dataset) CHECK(d.clean());
    CHECK(report.actual_totals.fundus == 363);
    CHECK(report.actual_totals.oct == 173915);
    CHECK(report.actual_totals.test_fundus == 297);
    CHECK(report.actual_totals.test_oct == 59593);
    CHECK(report.actual_totals.train_fundus == 66);
    CHECK(report.actual_totals.train_oct == 114322);
    CHECK(report.describe().find("PASS") != std::string::npos);
}

TEST_CASE("audit detects single-record mutations") {
    auto records = retseg::testing::conforming_manifest().records();

    SUBCASE("dropping one test scan") {
        for (auto it = records.begin(); it != records.end(); ++it) {
            if (it->dataset_id == DatasetId::zhang && it->split == Split::test) {
                records.erase(it);
                break;
            }
        }
        const AuditReport report = audit_splits(DatasetManifest(std::move(records)));
        CHECK(!report.passed);
        CHECK(report.per_dataset.at(DatasetId::zhang).test_oct == -1);
        CHECK(report.per_dataset.at(DatasetId::zhang).oct == -1);
        CHECK(report.describe().find("MISMATCH") != std::string::npos);
    }

    SUBCASE("flipping one split") {
        for (auto& r : records) {
            if (r.dataset_id == DatasetId::duke_ii && r.split == Split::train) {
                r.split = Split::test;
                break;
            }
        }
        const AuditReport report = audit_splits(DatasetManifest(std::move(records)));
        CHECK(!report.passed);
        CHECK(report.per_dataset.at(DatasetId::duke_ii).train_oct == -1);
        CHECK(report.per_dataset.at(DatasetId::duke_ii).test_oct == 1);
    }

    SUBCASE("flipping one modality") {
        for (auto& r : records) {
            if (r.dataset_id == DatasetId::rabbani_i && r.modality == Modality::oct) {
                r.modality = Modality::fundus;
                break;
            }
        }
        const AuditReport report = audit_splits(DatasetManifest(std::move(records)));
        CHECK(!report.passed);
        CHECK(report.per_dataset.at(DatasetId::rabbani_i).fundus == 1);
        CHECK(report.per_dataset.at(DatasetId::rabbani_i).oct == -1);
    }

    SUBCASE("synthetic records fail a real-data audit") {
        ScanRecord extra;
        extra.scan_id = "stray";
        extra.dataset_id = DatasetId::synthetic;
        extra.modality = Modality::oct;
        extra.image_ref = "stray.pgm";
        extra.split = Split::train;
        records.push_back(extra);
        const AuditReport report = audit_splits(DatasetManifest(std::move(records)));
        CHECK(!report.passed);
    }
}

TEST_CASE("groups partition the manifest") {
    const DatasetManifest m = retseg::testing::conforming_manifest();
    std::size_t total = 0;
    std::set<std::string> seen;
    for (GroupId g : all_groups()) {
        const DatasetManifest sub = group(m, g);
        total += sub.records().size();
        for (const auto& r : sub.records()) {
            CHECK(seen.insert(r.scan_id).second);
            CHECK(group_of(r.dataset_id) == g);
        }
    }
    CHECK(total == m.records().size());

    const DatasetManifest duke = group(m, GroupId::d);
    long duke_oct = 0;
    for (const auto& r : duke.records()) {
        CHECK((r.dataset_id == DatasetId::duke_i || r.dataset_id == DatasetId::duke_ii ||
               r.dataset_id == DatasetId::duke_iii));
        if (r.modality == Modality::oct) ++duke_oct;
    }
    CHECK(duke_oct == 38400 + 610 + 3231);

    const DatasetManifest r_group = group(m, GroupId::r);
    long r_oct = 0;
    for (const auto& r : r_group.records()) {
        if (r.modality == Modality::oct) ++r_oct;
    }
    CHECK(r_oct == 17041);

    CHECK(parse_group_id("Z") == GroupId::z);
    CHECK(parse_group_id("b") == GroupId::b);
    CHECK(!parse_group_id("Q").has_value());
}

TEST_CASE("synthetic fixture is deterministic and valid") {
    SynthOptions opt;
    opt.n_scans = 4;
    opt.seed = 1;
    const std::string dir_a = temp_dir("retseg_synth_a");
    const std::string dir_b = temp_dir("retseg_synth_b");
    const DatasetManifest ma = synth_fixture(opt, dir_a);
    const DatasetManifest mb = synth_fixture(opt, dir_b);
    REQUIRE(ma.records().size() == 4);
    for (std::size_t i = 0; i < ma.records().size(); ++i) {
        const auto& ra = ma.records()[i];
        const auto& rb = mb.records()[i];
        CHECK(read_file(dir_a + "/" + ra.image_ref) == read_file(dir_b + "/" + rb.image_ref));
        CHECK(read_file(dir_a + "/" + *ra.mask_ref) == read_file(dir_b + "/" + *rb.mask_ref));
    }

    const ClassMap cmap = default_class_map();
    for (const auto& r : ma.records()) {
        CHECK(validate_mask(load_mask(dir_a + "/" + *r.mask_ref), cmap).empty());
    }

    SynthOptions other = opt;
    other.seed = 2;
    const std::string dir_c = temp_dir("retseg_synth_c");
    const DatasetManifest mc = synth_fixture(other, dir_c);
    CHECK(read_file(dir_a + "/" + ma.records()[0].image_ref) !=
          read_file(dir_c + "/" + mc.records()[0].image_ref));

    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    std::filesystem::remove_all(dir_c);
}

TEST_CASE("synthetic fixture covers every lesion class") {
    SynthOptions opt;
    opt.n_scans = 10;
    opt.seed = 2;
    const std::string dir = temp_dir("retseg_synth_cover");
    const DatasetManifest m = synth_fixture(opt, dir);
    std::set<int> classes;
    for (const auto& r : m.records()) {
        const MaskImage mask = load_mask(dir + "/" + *r.mask_ref);
        for (auto v : mask.labels) {
            if (v != 0) classes.insert(v);
        }
    }
    CHECK(classes == std::set<int>{1, 2, 3, 4, 5});
    std::filesystem::remove_all(dir);
}

TEST_CASE("healthy fixture has all-background masks") {
    SynthOptions opt;
    opt.n_scans = 3;
    opt.healthy = true;
    opt.dataset_id = DatasetId::rabbani_ii;
    opt.split = Split::test;
    const std::string dir = temp_dir("retseg_synth_healthy");
    const DatasetManifest m = synth_fixture(opt, dir);
    for (const auto& r : m.records()) {
        CHECK(r.pathology == "healthy");
        CHECK(r.dataset_id == DatasetId::rabbani_ii);
        const MaskImage mask = load_mask(dir + "/" + *r.mask_ref);
        for (auto v : mask.labels) CHECK(v == 0);
    }
    std::filesystem::remove_all(dir);
}
