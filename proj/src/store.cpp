#include "wattrank/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wattrank/csv.hpp"
#include "wattrank/error.hpp"

namespace wattrank::store {

using nlohmann::json;

namespace {

void require(bool ok, const char* field, const std::string& what) {
    if (!ok) throw ValidationError(std::string(field) + ": " + what, field);
}

bool non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

void require_optional_energy(const std::optional<double>& v, const char* field) {
    if (v) require(non_negative(*v), field, "must be finite and >= 0");
}

// RAII exclusive lock on `<store>.lock`.
class WriterLock {
public:
    explicit WriterLock(const std::filesystem::path& store_path) {
        auto lock_path = store_path;
        lock_path += ".lock";
        fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) {
            throw ValidationError("cannot open lock file " + lock_path.string() + ": " + std::strerror(errno));
        }
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            const int err = errno;
            ::close(fd_);
            if (err == EWOULDBLOCK) throw StoreBusyError("store is locked by another writer: " + store_path.string());
            throw ValidationError("cannot lock " + lock_path.string() + ": " + std::strerror(err));
        }
    }
    ~WriterLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    WriterLock(const WriterLock&) = delete;
    WriterLock& operator=(const WriterLock&) = delete;

private:
    int fd_ = -1;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("store not found: " + path.string(), "store");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Parsed {
    LoadResult result;
    std::size_t complete_bytes = 0;  // prefix length that ends on a record boundary
};

Parsed parse_store(const std::string& text, bool lenient) {
    Parsed out;
    std::set<std::string> seen;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        ++line_no;
        const auto nl = text.find('\n', pos);
        const bool terminated = nl != std::string::npos;
        const std::string_view line(text.data() + pos, (terminated ? nl : text.size()) - pos);
        const std::size_t next = terminated ? nl + 1 : text.size();

        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            pos = next;
            out.complete_bytes = terminated ? next : out.complete_bytes;
            continue;
        }
        try {
            auto record = from_line(line);
            if (!seen.insert(record.run_id).second) throw DuplicateRunError(record.run_id);
            out.result.records.push_back(std::move(record));
            out.complete_bytes = next;
        } catch (const ValidationError& e) {
            if (!terminated) {
                // Interrupted append: leave it for the next writer to quarantine.
                out.result.partial_tail = true;
            } else if (lenient) {
                ++out.result.skipped_lines;
                out.complete_bytes = next;
            } else {
                throw ParseError(std::string("malformed store record: ") + e.what(), line_no);
            }
        }
        pos = next;
    }
    return out;
}

std::optional<double> optional_number(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) throw ValidationError(std::string(key) + ": expected a number", key);
    return it->get<double>();
}

template <typename T>
T required(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) throw ValidationError(std::string(key) + ": missing", key);
    if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ValidationError(std::string(key) + ": expected a string", key);
    } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ValidationError(std::string(key) + ": expected an integer", key);
    } else {
        if (!it->is_number()) throw ValidationError(std::string(key) + ": expected a number", key);
    }
    return it->get<T>();
}

}  // namespace

void validate(const RunRecord& r) {
    require(!r.run_id.empty(), "run_id", "must not be empty");
    require(r.gpu_count >= 1, "gpu_count", "must be >= 1");
    require(r.batch_size > 0, "batch_size", "must be > 0");
    require(std::isfinite(r.epochs) && r.epochs > 0.0, "epochs", "must be > 0");
    require(std::isfinite(r.data_fraction) && r.data_fraction > 0.0 && r.data_fraction <= 1.0, "data_fraction",
            "must be in (0, 1]");
    if (std::isfinite(r.accuracy) && r.accuracy > 1.5 && r.accuracy <= 100.0) {
        require(false, "accuracy", "must be a fraction in [0, 1]; values in percent need the percent unit flag");
    }
    require(std::isfinite(r.accuracy) && r.accuracy >= 0.0 && r.accuracy <= 1.0, "accuracy", "must be in [0, 1]");
    require(non_negative(r.train_energy_kwh), "train_energy_kwh", "must be finite and >= 0");
    require_optional_energy(r.test_energy_kwh, "test_energy_kwh");
    require_optional_energy(r.pretrain_energy_kwh, "pretrain_energy_kwh");
    require_optional_energy(r.gflops, "gflops");
    require_optional_energy(r.parameters_millions, "parameters_millions");
}

RunRecord complete(const RunDraft& d) {
    if (!d.run_id) throw ValidationError("run_id: missing", "run_id");
    if (!d.accuracy) throw ValidationError("accuracy: missing", "accuracy");
    if (!d.train_energy_kwh) throw ValidationError("train_energy_kwh: missing", "train_energy_kwh");
    RunRecord r;
    r.run_id = *d.run_id;
    r.model = d.model.value_or("");
    r.task = d.task.value_or("");
    r.dataset = d.dataset.value_or("");
    r.hardware = d.hardware.value_or("");
    r.gpu_count = d.gpu_count.value_or(1);
    r.batch_size = d.batch_size.value_or(1);
    r.epochs = d.epochs.value_or(1.0);
    r.data_fraction = d.data_fraction.value_or(1.0);
    r.accuracy = *d.accuracy;
    r.train_energy_kwh = *d.train_energy_kwh;
    r.notes = d.notes.value_or("");
    validate(r);
    return r;
}

std::string to_line(const RunRecord& r) {
    json j = json::object();
    j["run_id"] = r.run_id;
    j["model"] = r.model;
    j["task"] = r.task;
    j["dataset"] = r.dataset;
    j["hardware"] = r.hardware;
    j["gpu_count"] = r.gpu_count;
    j["batch_size"] = r.batch_size;
    j["epochs"] = r.epochs;
    j["data_fraction"] = r.data_fraction;
    j["accuracy"] = r.accuracy;
    j["train_energy_kwh"] = r.train_energy_kwh;
    if (r.test_energy_kwh) j["test_energy_kwh"] = *r.test_energy_kwh;
    if (r.pretrain_energy_kwh) j["pretrain_energy_kwh"] = *r.pretrain_energy_kwh;
    if (r.gflops) j["gflops"] = *r.gflops;
    if (r.parameters_millions) j["parameters_millions"] = *r.parameters_millions;
    j["notes"] = r.notes;
    return j.dump();
}

RunRecord from_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("not a JSON record: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("record must be a JSON object");
    RunRecord r;
    r.run_id = required<std::string>(j, "run_id");
    r.model = required<std::string>(j, "model");
    r.task = required<std::string>(j, "task");
    r.dataset = required<std::string>(j, "dataset");
    r.hardware = required<std::string>(j, "hardware");
    r.gpu_count = required<std::int64_t>(j, "gpu_count");
    r.batch_size = required<std::int64_t>(j, "batch_size");
    r.epochs = required<double>(j, "epochs");
    r.data_fraction = required<double>(j, "data_fraction");
    r.accuracy = required<double>(j, "accuracy");
    r.train_energy_kwh = required<double>(j, "train_energy_kwh");
    r.test_energy_kwh = optional_number(j, "test_energy_kwh");
    r.pretrain_energy_kwh = optional_number(j, "pretrain_energy_kwh");
    r.gflops = optional_number(j, "gflops");
    r.parameters_millions = optional_number(j, "parameters_millions");
    if (auto it = j.find("notes"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw ValidationError("notes: expected a string", "notes");
        r.notes = it->get<std::string>();
    }
    validate(r);
    return r;
}

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> columns = {
        "run_id",         "model",           "task",
        "dataset",        "hardware",        "gpu_count",
        "batch_size",     "epochs",          "data_fraction",
        "accuracy",       "train_energy_kwh", "test_energy_kwh",
        "pretrain_energy_kwh", "gflops",     "parameters_millions",
        "notes"};
    return columns;
}

std::string export_csv(const std::vector<RunRecord>& records) {
    auto opt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); };
    std::string out = csv::join(csv_columns()) + "\n";
    for (const auto& r : records) {
        out += csv::join({r.run_id, r.model, r.task, r.dataset, r.hardware, std::to_string(r.gpu_count),
                          std::to_string(r.batch_size), csv::format_double(r.epochs),
                          csv::format_double(r.data_fraction), csv::format_double(r.accuracy),
                          csv::format_double(r.train_energy_kwh), opt(r.test_energy_kwh),
                          opt(r.pretrain_energy_kwh), opt(r.gflops), opt(r.parameters_millions), r.notes});
        out += "\n";
    }
    return out;
}

std::vector<RunRecord> import_csv(std::string_view document, const CsvImportOptions& options) {
    std::istringstream in{std::string(document)};
    auto rows = csv::read(in);
    if (rows.empty()) throw SchemaError("CSV document has no header");

    const auto& header = rows.front();
    std::map<std::string, std::size_t> col;
    const auto& known = csv_columns();
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
        const auto& name = header.fields[i];
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            if (options.lenient) continue;
            throw SchemaError("unknown column '" + name + "'", name);
        }
        if (!col.emplace(name, i).second) throw SchemaError("duplicate column '" + name + "'", name);
    }
    for (const char* name : {"run_id", "model", "task", "dataset", "batch_size", "accuracy", "train_energy_kwh"}) {
        if (!col.contains(name)) throw SchemaError(std::string("missing required column '") + name + "'", name);
    }

    std::vector<RunRecord> out;
    std::set<std::string> seen;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& row = rows[k];
        if (row.fields.size() != header.fields.size()) {
            throw ParseError("expected " + std::to_string(header.fields.size()) + " fields, got " +
                                 std::to_string(row.fields.size()),
                             row.line);
        }
        auto cell = [&](const char* name) -> const std::string* {
            auto it = col.find(name);
            return it == col.end() ? nullptr : &row.fields[it->second];
        };
        auto text = [&](const char* name) {
            const auto* c = cell(name);
            return c ? *c : std::string();
        };
        auto number = [&](const char* name, double fallback) {
            const auto* c = cell(name);
            if (!c) return fallback;
            if (c->empty()) throw ParseError(std::string("empty value for ") + name, row.line);
            return csv::parse_double(*c, name, row.line);
        };
        auto integer = [&](const char* name, std::int64_t fallback) {
            const auto* c = cell(name);
            if (!c) return fallback;
            return csv::parse_int(*c, name, row.line);
        };
        auto optional = [&](const char* name) -> std::optional<double> {
            const auto* c = cell(name);
            if (!c || c->empty() || *c == "---") return std::nullopt;
            return csv::parse_double(*c, name, row.line);
        };

        RunRecord r;
        r.run_id = text("run_id");
        r.model = text("model");
        r.task = text("task");
        r.dataset = text("dataset");
        r.hardware = text("hardware");
        r.gpu_count = integer("gpu_count", 1);
        r.batch_size = integer("batch_size", 1);
        r.epochs = number("epochs", 1.0);
        r.data_fraction = number("data_fraction", 1.0);
        r.accuracy = number("accuracy", 0.0);
        if (options.accuracy_unit == AccuracyUnit::percent) r.accuracy /= 100.0;
        r.train_energy_kwh = number("train_energy_kwh", 0.0);
        r.test_energy_kwh = optional("test_energy_kwh");
        r.pretrain_energy_kwh = optional("pretrain_energy_kwh");
        r.gflops = optional("gflops");
        r.parameters_millions = optional("parameters_millions");
        r.notes = text("notes");
        try {
            validate(r);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), row.line);
        }
        if (!seen.insert(r.run_id).second) throw DuplicateRunError(r.run_id);
        out.push_back(std::move(r));
    }
    return out;
}

bool RunFilter::matches(const RunRecord& r) const {
    if (task && r.task != *task) return false;
    if (dataset && r.dataset != *dataset) return false;
    if (model && r.model != *model) return false;
    return !predicate || predicate(r);
}

LoadResult load_runs(const std::filesystem::path& store_path, const RunFilter& filter, const LoadOptions& options) {
    if (!std::filesystem::exists(store_path)) {
        if (options.create_if_missing) return {};
        throw NotFoundError("store not found: " + store_path.string(), "store");
    }
    auto parsed = parse_store(read_file(store_path), options.lenient);
    auto& result = parsed.result;
    std::erase_if(result.records, [&](const RunRecord& r) { return !filter.matches(r); });
    return std::move(result);
}

void append_run(const std::filesystem::path& store_path, const RunRecord& record) {
    append_runs(store_path, {record});
}

void append_runs(const std::filesystem::path& store_path, const std::vector<RunRecord>& records) {
    std::set<std::string> incoming;
    for (const auto& r : records) {
        validate(r);
        if (!incoming.insert(r.run_id).second) throw DuplicateRunError(r.run_id);
    }

    WriterLock lock(store_path);

    std::string existing;
    if (std::filesystem::exists(store_path)) existing = read_file(store_path);
    auto parsed = parse_store(existing, false);
    for (const auto& r : parsed.result.records) {
        if (incoming.contains(r.run_id)) throw DuplicateRunError(r.run_id);
    }

    if (parsed.result.partial_tail) {
        auto quarantine = store_path;
        quarantine += ".quarantine";
        std::ofstream q(quarantine, std::ios::app | std::ios::binary);
        q << existing.substr(parsed.complete_bytes) << '\n';
        if (!q) throw ValidationError("cannot write " + quarantine.string());
        std::filesystem::resize_file(store_path, parsed.complete_bytes);
        existing.resize(parsed.complete_bytes);
    }

    std::string payload;
    if (!existing.empty() && existing.back() != '\n') payload.push_back('\n');
    for (const auto& r : records) payload += to_line(r) + "\n";
    if (records.empty() && payload.empty()) return;

    const int fd = ::open(store_path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw ValidationError("cannot open store " + store_path.string() + ": " + std::strerror(errno));
    std::size_t written = 0;
    while (written < payload.size()) {
        const auto n = ::write(fd, payload.data() + written, payload.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            const int err = errno;
            ::close(fd);
            throw ValidationError("write to store failed: " + std::string(std::strerror(err)));
        }
        written += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
}

}  // namespace wattrank::store
