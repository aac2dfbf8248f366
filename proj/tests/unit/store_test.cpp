#include <gtest/gtest.h>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "wattrank/error.hpp"
#include "wattrank/store.hpp"

using namespace wattrank;
using namespace wattrank::store;
namespace fs = std::filesystem;

namespace {

class StoreTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("wattrank-store-" + std::to_string(::getpid()) + "-" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name = "runs.jsonl") const { return dir_ / name; }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

RunRecord minimal(const std::string& id, double accuracy = 0.5) {
    RunRecord r;
    r.run_id = id;
    r.model = "m";
    r.task = "t";
    r.dataset = "d";
    r.accuracy = accuracy;
    r.train_energy_kwh = 12.5;
    return r;
}

}  // namespace

TEST_F(StoreTest, AppendIntoEmptyStore) {
    append_run(path(), minimal("a"));
    const auto loaded = load_runs(path());
    ASSERT_EQ(loaded.records.size(), 1u);
    EXPECT_EQ(loaded.records[0], minimal("a"));
}

TEST_F(StoreTest, DuplicateRunId) {
    append_run(path(), minimal("a"));
    EXPECT_THROW(append_run(path(), minimal("a")), DuplicateRunError);
    EXPECT_THROW(append_runs(path(), {minimal("b"), minimal("b")}), DuplicateRunError);
    EXPECT_EQ(load_runs(path()).records.size(), 1u);
}

TEST_F(StoreTest, InvalidRecordNamesField) {
    try {
        append_run(path(), minimal("a", 1.2));
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "accuracy");
    }
    EXPECT_FALSE(fs::exists(path()));
}

TEST_F(StoreTest, LoadInAppendOrderAndFilter) {
    append_run(path(), minimal("c"));
    append_run(path(), minimal("a"));
    append_run(path(), minimal("b"));
    const auto all = load_runs(path()).records;
    ASSERT_EQ(all.size(), 3u);
    EXPECT_EQ(all[0].run_id, "c");
    EXPECT_EQ(all[2].run_id, "b");

    RunFilter only_a;
    only_a.predicate = [](const RunRecord& r) { return r.run_id == "a"; };
    EXPECT_EQ(load_runs(path(), only_a).records.size(), 1u);
}

TEST_F(StoreTest, FilterCityscapesFromFixture) {
    append_runs(path(), wattrank::testing::segmentation_runs());
    RunFilter f;
    f.dataset = "Cityscapes";
    EXPECT_EQ(load_runs(path(), f).records.size(), 6u);
    f.model = "PSPNet";
    EXPECT_EQ(load_runs(path(), f).records.size(), 1u);
}

TEST_F(StoreTest, MissingFile) {
    EXPECT_THROW(load_runs(path()), NotFoundError);
    EXPECT_TRUE(load_runs(path(), {}, {.lenient = false, .create_if_missing = true}).records.empty());
}

TEST_F(StoreTest, MalformedLineNamesLineUnlessLenient) {
    append_run(path(), minimal("a"));
    std::ofstream(path(), std::ios::app) << "{not json}\n";
    append_run(path("other.jsonl"), minimal("b"));
    std::ofstream(path(), std::ios::app) << slurp(path("other.jsonl"));
    try {
        load_runs(path());
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    const auto lenient = load_runs(path(), {}, {.lenient = true});
    EXPECT_EQ(lenient.records.size(), 2u);
    EXPECT_EQ(lenient.skipped_lines, 1u);
}

TEST_F(StoreTest, PartialTailIsSkippedThenQuarantined) {
    append_run(path(), minimal("a"));
    std::ofstream(path(), std::ios::app) << R"({"run_id":"half","mod)";
    const auto loaded = load_runs(path());
    EXPECT_TRUE(loaded.partial_tail);
    EXPECT_EQ(loaded.records.size(), 1u);

    append_run(path(), minimal("b"));
    auto quarantine = path();
    quarantine += ".quarantine";
    EXPECT_NE(slurp(quarantine).find("\"half\""), std::string::npos);
    const auto after = load_runs(path());
    EXPECT_FALSE(after.partial_tail);
    ASSERT_EQ(after.records.size(), 2u);
    EXPECT_EQ(after.records[1].run_id, "b");
}

TEST_F(StoreTest, ConcurrentWriterIsBusy) {
    auto lock_path = path();
    lock_path += ".lock";
    const int fd = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
    ASSERT_GE(fd, 0);
    ASSERT_EQ(::flock(fd, LOCK_EX | LOCK_NB), 0);
    EXPECT_THROW(append_run(path(), minimal("a")), StoreBusyError);
    ::flock(fd, LOCK_UN);
    ::close(fd);
    EXPECT_NO_THROW(append_run(path(), minimal("a")));
}

TEST_F(StoreTest, AbsentOptionalDiffersFromZero) {
    auto absent = minimal("absent");
    auto zero = minimal("zero");
    zero.test_energy_kwh = 0.0;
    append_runs(path(), {absent, zero});
    const auto loaded = load_runs(path()).records;
    EXPECT_FALSE(loaded[0].test_energy_kwh.has_value());
    EXPECT_EQ(loaded[1].test_energy_kwh, 0.0);
    EXPECT_EQ(slurp(path()).find("\"test_energy_kwh\""), slurp(path()).rfind("\"test_energy_kwh\""));
}

TEST_F(StoreTest, LoadAfterEveryPrefixOfAppends) {
    wattrank::testing::RecordGenerator gen(41);
    const auto records = gen.records(40);
    for (std::size_t i = 0; i < records.size(); ++i) {
        append_run(path(), records[i]);
        const auto loaded = load_runs(path()).records;
        ASSERT_EQ(loaded, std::vector<RunRecord>(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(i) + 1));
    }
}

TEST(CsvExchange, Table2FixtureRoundTrip) {
    const auto runs = wattrank::testing::action_recognition_runs();
    ASSERT_EQ(runs.size(), 13u);
    EXPECT_EQ(import_csv(export_csv(runs)), runs);
}

TEST(CsvExchange, EmptyListIsHeaderOnly) {
    const auto doc = export_csv({});
    EXPECT_EQ(doc, "run_id,model,task,dataset,hardware,gpu_count,batch_size,epochs,data_fraction,accuracy,"
                   "train_energy_kwh,test_energy_kwh,pretrain_energy_kwh,gflops,parameters_millions,notes\n");
    EXPECT_TRUE(import_csv(doc).empty());
}

TEST(CsvExchange, MissingAccuracyColumn) {
    try {
        import_csv("run_id,model,task,dataset,batch_size,train_energy_kwh\nx,m,t,d,8,10\n");
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("accuracy"), std::string::npos);
    }
}

TEST(CsvExchange, UnknownColumnsNeedLenient) {
    const std::string doc = "run_id,model,task,dataset,batch_size,accuracy,train_energy_kwh,flavour\nx,m,t,d,8,0.5,10,mint\n";
    EXPECT_THROW(import_csv(doc), SchemaError);
    const auto runs = import_csv(doc, {.lenient = true});
    ASSERT_EQ(runs.size(), 1u);
    EXPECT_EQ(runs[0].gpu_count, 1);
}

TEST(CsvExchange, PercentUnitIsExplicit) {
    const std::string doc = "run_id,model,task,dataset,batch_size,accuracy,train_energy_kwh\nx,m,t,d,8,80.2,67.9001\n";
    try {
        import_csv(doc);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("percent"), std::string::npos);
    }
    const auto runs = import_csv(doc, {.accuracy_unit = AccuracyUnit::percent});
    EXPECT_DOUBLE_EQ(runs.at(0).accuracy, 0.802);
}

TEST(CsvExchange, DashesMeanAbsent) {
    const auto runs = import_csv(
        "run_id,model,task,dataset,batch_size,accuracy,train_energy_kwh,test_energy_kwh\nx,m,t,d,8,0.5,10,---\n");
    EXPECT_FALSE(runs.at(0).test_energy_kwh.has_value());
}

TEST(CsvExchange, BadNumberNamesRow) {
    try {
        import_csv("run_id,model,task,dataset,batch_size,accuracy,train_energy_kwh\nx,m,t,d,8,0.5,10\ny,m,t,d,eight,0.5,10\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Complete, RequiresCoreFields) {
    RunDraft d;
    d.run_id = "x";
    d.accuracy = 0.7;
    EXPECT_THROW(complete(d), ValidationError);
    d.train_energy_kwh = 3.0;
    const auto r = complete(d);
    EXPECT_EQ(r.batch_size, 1);
    EXPECT_EQ(r.data_fraction, 1.0);
}

TEST(RoundTripProperty, LineAndCsv) {
    wattrank::testing::RecordGenerator gen(1234);
    for (int iter = 0; iter < 200; ++iter) {
        const auto records = gen.records(1 + iter % 25);
        for (const auto& r : records) ASSERT_EQ(from_line(to_line(r)), r) << to_line(r);
        ASSERT_EQ(import_csv(export_csv(records)), records);
    }
}
