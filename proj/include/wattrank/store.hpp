#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wattrank::store {

/// One training/evaluation run. Optional energies and sizes are kept distinct
/// from zero: an absent test energy is "not measured", not 0 kWh.
struct RunRecord {
    std::string run_id;
    std::string model;
    std::string task;
    std::string dataset;
    std::string hardware;
    std::int64_t gpu_count = 1;
    std::int64_t batch_size = 1;
    double epochs = 1.0;
    double data_fraction = 1.0;
    double accuracy = 0.0;  // fraction in [0, 1]
    double train_energy_kwh = 0.0;
    std::optional<double> test_energy_kwh;
    std::optional<double> pretrain_energy_kwh;
    std::optional<double> gflops;
    std::optional<double> parameters_millions;
    std::string notes;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Metadata known before a run finishes (e.g. captured from `track` flags).
struct RunDraft {
    std::optional<std::string> run_id;
    std::optional<std::string> model;
    std::optional<std::string> task;
    std::optional<std::string> dataset;
    std::optional<std::string> hardware;
    std::optional<std::int64_t> gpu_count;
    std::optional<std::int64_t> batch_size;
    std::optional<double> epochs;
    std::optional<double> data_fraction;
    std::optional<double> accuracy;
    std::optional<double> train_energy_kwh;
    std::optional<std::string> notes;
};

/// Fills defaults for unset draft fields and validates. Throws
/// ValidationError naming the first missing required field
/// (run_id, accuracy, train_energy_kwh).
RunRecord complete(const RunDraft& draft);

/// Throws ValidationError naming the offending field.
void validate(const RunRecord& record);

/// Column order of the CSV exchange format.
const std::vector<std::string>& csv_columns();

enum class AccuracyUnit { fraction, percent };

struct CsvImportOptions {
    bool lenient = false;  // ignore unknown columns
    AccuracyUnit accuracy_unit = AccuracyUnit::fraction;
};

std::string export_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> import_csv(std::string_view document, const CsvImportOptions& options = {});

/// One self-describing store line (JSON object, no trailing newline).
std::string to_line(const RunRecord& record);
/// Parses and validates one store line. Throws ValidationError.
RunRecord from_line(std::string_view line);

struct RunFilter {
    std::optional<std::string> task;
    std::optional<std::string> dataset;
    std::optional<std::string> model;
    std::function<bool(const RunRecord&)> predicate;

    bool matches(const RunRecord& record) const;
};

struct LoadOptions {
    bool lenient = false;            // skip malformed lines instead of failing
    bool create_if_missing = false;  // a missing file is an empty store
};

struct LoadResult {
    std::vector<RunRecord> records;
    std::size_t skipped_lines = 0;
    bool partial_tail = false;  // an unterminated, unparsable last line was ignored
};

/// Records in append order. Readers take no lock; a partially written final
/// line is reported via `partial_tail` and skipped.
LoadResult load_runs(const std::filesystem::path& store_path, const RunFilter& filter = {},
                     const LoadOptions& options = {});

/// Appends under an exclusive advisory lock (`<store>.lock`). A concurrent
/// writer gets StoreBusyError. A partial tail left by an interrupted writer is
/// moved to `<store>.quarantine` before writing.
void append_run(const std::filesystem::path& store_path, const RunRecord& record);

/// All-or-nothing variant: every record is validated and checked for
/// duplicates (against the store and each other) before anything is written.
void append_runs(const std::filesystem::path& store_path, const std::vector<RunRecord>& records);

}  // namespace wattrank::store
