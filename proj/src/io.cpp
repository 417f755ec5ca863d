#include "mmdcp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace mmdcp::io {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kLabelsPreamble = "#labels:";

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        auto cell = trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
            cell = cell.substr(1, cell.size() - 2);
        }
        out.emplace_back(cell);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, char delim) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += delim;
        out += parts[i];
    }
    return out;
}

struct RawCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> preamble_labels;
};

RawCsv read_raw(const fs::path& path, char delim) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    RawCsv raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty()) continue;
        if (t.starts_with(kLabelsPreamble)) {
            raw.preamble_labels = split(t.substr(kLabelsPreamble.size()), delim);
            continue;
        }
        if (t.front() == '#') continue;
        auto cells = split(t, delim);
        if (raw.header.empty()) {
            raw.header = std::move(cells);
            continue;
        }
        if (cells.size() != raw.header.size()) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(raw.header.size()) + " cells, found " + std::to_string(cells.size()));
        }
        raw.rows.push_back(std::move(cells));
    }
    if (raw.header.empty() || raw.rows.empty()) {
        throw IoError(path.string() + ": file has no data rows");
    }
    return raw;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

double parse_cell(const std::string& cell, const fs::path& path, std::size_t row) {
    try {
        return parse_double(cell);
    } catch (const IoError&) {
        throw IoError(path.string() + ": non-numeric feature '" + cell + "' in data row " + std::to_string(row + 1));
    }
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? header.size() : static_cast<std::size_t>(it - header.begin());
}

std::vector<std::string> feature_header(std::size_t p) {
    std::vector<std::string> h;
    for (std::size_t j = 0; j < p; ++j) h.push_back("x" + std::to_string(j + 1));
    return h;
}

std::string label_name(const std::vector<std::string>& names, int k) {
    if (k >= 1 && static_cast<std::size_t>(k) <= names.size()) return names[static_cast<std::size_t>(k - 1)];
    return std::to_string(k);
}

void write_row(std::ostream& out, std::span<const double> values) {
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (j) out << ',';
        out << format_double(values[j]);
    }
}

std::vector<std::string> dictionary_for(const LabeledDataset& data) {
    std::vector<std::string> names;
    for (int k = 1; k <= data.num_classes; ++k) names.push_back(label_name(data.label_names, k));
    return names;
}

std::size_t parse_size(std::string_view s) {
    std::size_t v = 0;
    const auto t = trim(s);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) throw IoError("not an unsigned integer: '" + std::string(s) + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    const auto t = trim(s);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) throw IoError("not an unsigned integer: '" + std::string(s) + "'");
    return v;
}

int parse_int(std::string_view s) {
    int v = 0;
    const auto t = trim(s);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) throw IoError("not an integer: '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw IoError("cannot format number");
    return {buf, ptr};
}

double parse_double(std::string_view s) {
    const auto t = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw IoError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

CsvDataset load_csv(const fs::path& path, const CsvOptions& options) {
    const auto raw = read_raw(path, options.delimiter);
    const auto label_col = find_column(raw.header, options.label_column);
    if (label_col == raw.header.size()) {
        throw IoError(path.string() + ": no label column '" + options.label_column + "'");
    }

    CsvDataset out;
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
        if (c != label_col) out.feature_names.push_back(raw.header[c]);
    }
    const std::size_t p = out.feature_names.size();
    if (p == 0) throw IoError(path.string() + ": no feature columns");

    auto& names = out.inliers.label_names;
    names = raw.preamble_labels;
    std::map<std::string, int> ids;
    for (std::size_t k = 0; k < names.size(); ++k) ids.emplace(names[k], static_cast<int>(k) + 1);

    out.inliers.features = Matrix(0, p);
    out.outliers = Matrix(0, p);
    std::vector<double> values(p);
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const auto& cells = raw.rows[r];
        std::size_t j = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c != label_col) values[j++] = parse_cell(cells[c], path, r);
        }
        const auto& label = cells[label_col];
        if (options.outlier_label && label == *options.outlier_label) {
            out.outliers.append_row(values);
            continue;
        }
        auto [it, inserted] = ids.emplace(label, static_cast<int>(names.size()) + 1);
        if (inserted) names.push_back(label);
        out.inliers.features.append_row(values);
        out.inliers.labels.push_back(it->second);
    }
    out.inliers.num_classes = static_cast<int>(names.size());
    if (out.inliers.size() == 0) throw IoError(path.string() + ": no inlier rows");
    return out;
}

TestBatch load_test_csv(const fs::path& path, const std::vector<std::string>& label_names, const CsvOptions& options) {
    const auto raw = read_raw(path, options.delimiter);
    const auto label_col = find_column(raw.header, options.label_column);
    const bool has_truth = label_col < raw.header.size();
    const std::size_t p = raw.header.size() - (has_truth ? 1 : 0);
    const int K = static_cast<int>(label_names.size());

    TestBatch out;
    out.features = Matrix(0, p);
    std::vector<int> truth;
    std::vector<double> values(p);
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const auto& cells = raw.rows[r];
        std::size_t j = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c != label_col) values[j++] = parse_cell(cells[c], path, r);
        }
        out.features.append_row(values);
        if (has_truth) {
            const auto& label = cells[label_col];
            const auto it = std::find(label_names.begin(), label_names.end(), label);
            if (it != label_names.end()) {
                truth.push_back(static_cast<int>(it - label_names.begin()) + 1);
            } else if (label == (options.outlier_label ? *options.outlier_label : std::string(kOutlierName))) {
                truth.push_back(K + 1);
            } else {
                throw IoError(path.string() + ": unknown label '" + label + "' in data row " + std::to_string(r + 1));
            }
        }
    }
    if (has_truth) out.truth = std::move(truth);
    return out;
}

std::pair<LabeledDataset, TestBatch> split_train_test(const CsvDataset& data, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("train fraction must lie in (0, 1)");
    const auto& pool = data.inliers;
    const int K = pool.num_classes;

    LabeledDataset train;
    train.num_classes = K;
    train.label_names = pool.label_names;
    train.features = Matrix(0, pool.dim());
    TestBatch test;
    test.features = Matrix(0, pool.dim());
    std::vector<int> truth;

    for (int k = 1; k <= K; ++k) {
        auto rows = pool.class_rows(k);
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        std::shuffle(rows.begin(), rows.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
        if (n_train < kMinClassCount) {
            throw ValidationError("class '" + label_name(pool.label_names, k) + "' keeps only " + std::to_string(n_train) +
                                  " training rows after the split, need at least " + std::to_string(kMinClassCount));
        }
        std::sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
        std::sort(rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i < n_train) {
                train.features.append_row(pool.features.row(rows[i]));
                train.labels.push_back(k);
            } else {
                test.features.append_row(pool.features.row(rows[i]));
                truth.push_back(k);
            }
        }
    }
    for (std::size_t i = 0; i < data.outliers.rows(); ++i) {
        test.features.append_row(data.outliers.row(i));
        truth.push_back(K + 1);
    }
    test.truth = std::move(truth);
    return {std::move(train), std::move(test)};
}

std::pair<LabeledDataset, TestBatch> split_train_test(const LabeledDataset& data, double fraction, std::uint64_t seed) {
    CsvDataset wrapped{data, Matrix(0, data.dim()), {}};
    return split_train_test(wrapped, fraction, seed);
}

void write_dataset_csv(const fs::path& path, const LabeledDataset& data) {
    auto out = open_out(path);
    const auto names = dictionary_for(data);
    out << kLabelsPreamble << join(names, ',') << '\n';
    auto header = feature_header(data.dim());
    header.emplace_back("label");
    out << join(header, ',') << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        write_row(out, data.features.row(i));
        out << ',' << names[static_cast<std::size_t>(data.labels[i] - 1)] << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

LabeledDataset read_dataset_csv(const fs::path& path) { return load_csv(path).inliers; }

void write_test_csv(const fs::path& path, const TestBatch& test, const std::vector<std::string>& label_names) {
    auto out = open_out(path);
    auto header = feature_header(test.features.cols());
    if (test.truth) header.emplace_back("label");
    out << join(header, ',') << '\n';
    const int K = static_cast<int>(label_names.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        write_row(out, test.features.row(i));
        if (test.truth) {
            const int t = (*test.truth)[i];
            out << ',' << (t == K + 1 ? std::string(kOutlierName) : label_name(label_names, t));
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void write_oracle_params(const fs::path& path, const OracleParams& params) {
    auto out = open_out(path);
    out << "class,kind,values\n";
    for (std::size_t k = 0; k < params.means.size(); ++k) {
        out << k + 1 << ",mean,";
        write_row(out, params.means[k]);
        out << '\n' << k + 1 << ",var,";
        write_row(out, params.diag_sigma[k]);
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

OracleParams read_oracle_params(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    OracleParams params;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() < 3) throw IoError(path.string() + ": malformed oracle row");
        const auto k = parse_size(cells[0]);
        if (k < 1) throw IoError(path.string() + ": class ids start at 1");
        std::vector<double> values;
        for (std::size_t c = 2; c < cells.size(); ++c) values.push_back(parse_double(cells[c]));
        auto& target = cells[1] == "mean" ? params.means : params.diag_sigma;
        if (cells[1] != "mean" && cells[1] != "var") throw IoError(path.string() + ": unknown row kind " + cells[1]);
        if (target.size() < k) target.resize(k);
        target[k - 1] = std::move(values);
    }
    params.check();
    return params;
}

void write_class_summary(const fs::path& path, const ClassSummary& summary) {
    auto out = open_out(path);
    out << "class,count,kind,values\n";
    out << summary.class_id << ',' << summary.count << ",mean,";
    write_row(out, summary.mean);
    out << '\n' << summary.class_id << ',' << summary.count << ",var,";
    write_row(out, summary.diag_var);
    out << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

ClassSummary read_class_summary(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    ClassSummary s;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() < 4) throw IoError(path.string() + ": malformed summary row");
        s.class_id = parse_int(cells[0]);
        s.count = parse_size(cells[1]);
        std::vector<double> values;
        for (std::size_t c = 3; c < cells.size(); ++c) values.push_back(parse_double(cells[c]));
        (cells[2] == "mean" ? s.mean : s.diag_var) = std::move(values);
    }
    return s;
}

namespace {

fs::path thresholds_path(const fs::path& path) {
    auto p = path;
    p.replace_filename(path.stem().string() + "_thresholds.csv");
    return p;
}

}  // namespace

void write_pvalues(const fs::path& path, const PValueMatrix& pv) {
    const std::size_t K = pv.thresholds.size();
    {
        auto out = open_out(path);
        out << "index";
        for (std::size_t k = 1; k <= K; ++k) out << ",raw_" << k;
        for (std::size_t k = 1; k <= K; ++k) out << ",adj_" << k;
        out << '\n';
        for (std::size_t i = 0; i < pv.raw.rows(); ++i) {
            out << i;
            for (std::size_t k = 0; k < K; ++k) out << ',' << format_double(pv.raw(i, k));
            for (std::size_t k = 0; k < K; ++k) out << ',' << format_double(pv.adjusted(i, k));
            out << '\n';
        }
        if (!out) throw IoError("failed writing " + path.string());
    }
    auto out = open_out(thresholds_path(path));
    out << "class,n_k,alpha,threshold\n";
    for (std::size_t k = 0; k < K; ++k) {
        out << k + 1 << ',' << (k < pv.class_counts.size() ? pv.class_counts[k] : 0) << ',' << format_double(pv.alpha)
            << ',' << format_double(pv.thresholds[k]) << '\n';
    }
    if (!out) throw IoError("failed writing " + thresholds_path(path).string());
}

PValueMatrix read_pvalues(const fs::path& path) {
    PValueMatrix pv;
    {
        const auto raw = read_raw(thresholds_path(path), ',');
        for (const auto& row : raw.rows) {
            pv.class_counts.push_back(parse_size(row[1]));
            pv.alpha = parse_double(row[2]);
            pv.thresholds.push_back(parse_double(row[3]));
        }
    }
    const std::size_t K = pv.thresholds.size();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<double> raw_vals;
    std::vector<double> adj_vals;
    std::size_t m = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 1 + 2 * K) throw IoError(path.string() + ": malformed p-value row");
        for (std::size_t k = 0; k < K; ++k) raw_vals.push_back(parse_double(cells[1 + k]));
        for (std::size_t k = 0; k < K; ++k) adj_vals.push_back(parse_double(cells[1 + K + k]));
        ++m;
    }
    pv.raw = Matrix(m, K, std::move(raw_vals));
    pv.adjusted = Matrix(m, K, std::move(adj_vals));
    return pv;
}

void write_prediction_sets(const fs::path& path, const PredictionSets& sets, int num_classes) {
    auto out = open_out(path);
    out << "index";
    for (int k = 1; k <= num_classes; ++k) out << ",in_" << k;
    out << ",set\n";
    for (std::size_t i = 0; i < sets.size(); ++i) {
        out << i;
        for (int k = 1; k <= num_classes; ++k) out << ',' << (sets.contains(i, k) ? 1 : 0);
        out << ',';
        for (std::size_t j = 0; j < sets.sets[i].size(); ++j) {
            if (j) out << ';';
            out << sets.sets[i][j];
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

PredictionSets read_prediction_sets(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    PredictionSets sets;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        // trailing empty cell is dropped by trim, so take the text after the last comma directly
        const auto pos = line.find_last_of(',');
        if (pos == std::string::npos) throw IoError(path.string() + ": malformed set row");
        const auto tail = trim(std::string_view(line).substr(pos + 1));
        std::vector<int> s;
        if (!tail.empty()) {
            for (const auto& id : split(tail, ';')) s.push_back(parse_int(id));
        }
        sets.sets.push_back(std::move(s));
    }
    return sets;
}

std::vector<MetricSummary> summarize(std::span<const MetricsReport> reports) {
    if (reports.empty()) throw IoError("no reports to summarize");
    const auto first = reports.front().named();
    std::vector<MetricSummary> out;
    for (std::size_t j = 0; j < first.size(); ++j) {
        out.push_back({first[j].first, 0.0, 0.0});
    }
    std::vector<std::vector<double>> columns(first.size());
    for (const auto& r : reports) {
        const auto named = r.named();
        if (named.size() != first.size()) throw IoError("reports disagree on the number of classes");
        for (std::size_t j = 0; j < named.size(); ++j) columns[j].push_back(named[j].second);
    }
    const double n = static_cast<double>(reports.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const double mean = std::accumulate(columns[j].begin(), columns[j].end(), 0.0) / n;
        double ss = 0.0;
        for (double v : columns[j]) ss += (v - mean) * (v - mean);
        out[j].mean = mean;
        out[j].std = reports.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    return out;
}

std::string mean_std_cell(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f(%.3f)", mean, std);
    return buf;
}

void write_results(std::span<const MetricsReport> reports, const fs::path& base) {
    const auto rows = summarize(reports);
    auto csv_path = base;
    csv_path += ".csv";
    auto txt_path = base;
    txt_path += ".txt";
    {
        auto out = open_out(csv_path);
        out << "metric,mean,std\n";
        for (const auto& r : rows) out << r.name << ',' << format_double(r.mean) << ',' << format_double(r.std) << '\n';
        if (!out) throw IoError("failed writing " + csv_path.string());
    }
    auto out = open_out(txt_path);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-18s %s\n", "metric", "mean(std)");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-18s %s\n", r.name.c_str(), mean_std_cell(r.mean, r.std).c_str());
        out << buf;
    }
    out << "runs: " << reports.size() << '\n';
    if (!out) throw IoError("failed writing " + txt_path.string());
}

std::vector<MetricSummary> read_results_csv(const fs::path& path) {
    const auto raw = read_raw(path, ',');
    std::vector<MetricSummary> out;
    for (const auto& row : raw.rows) {
        out.push_back({row[0], parse_double(row[1]), parse_double(row[2])});
    }
    return out;
}

RunMode parse_run_mode(const std::string& s) {
    if (s == "empirical") return RunMode::empirical;
    if (s == "oracle") return RunMode::oracle;
    if (s == "both") return RunMode::both;
    throw ValidationError("unknown mode '" + s + "' (expected empirical, oracle or both)");
}

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::empirical: return "empirical";
        case RunMode::oracle: return "oracle";
        case RunMode::both: return "both";
    }
    return "both";
}

void ExperimentConfig::check() const {
    if (replicates < 1) throw ValidationError("replicates must be at least 1");
    if (test_sets_per_run < 1) throw ValidationError("test_sets must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (uses_csv()) {
        if (csv_path.empty()) throw ValidationError("csv source needs a csv path");
        if (mode != RunMode::empirical) throw ValidationError("csv source supports only mode = empirical");
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValidationError("train_fraction must lie in (0, 1)");
    } else if (p_grid.empty() || nk_grid.empty() || rho_grid.empty()) {
        throw ValidationError("experiment grid is empty");
    }
}

namespace {

template <class T, class Parse>
std::vector<T> parse_list(std::string_view value, Parse parse) {
    std::vector<T> out;
    const auto t = trim(value);
    if (t.empty()) return out;
    for (const auto& item : split(t, ',')) out.push_back(parse(item));
    return out;
}

template <class T, class Format>
std::string format_list(const std::vector<T>& values, Format fmt) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += fmt(values[i]);
    }
    return out;
}

bool parse_bool(std::string_view s) {
    const auto t = trim(s);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw IoError("not a boolean: '" + std::string(s) + "'");
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text) {
    ExperimentConfig cfg;
    bool mode_set = false;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (const auto hash = t.find('#'); hash != std::string_view::npos) t = trim(t.substr(0, hash));
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw IoError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(trim(t.substr(0, eq)));
        const std::string value(trim(t.substr(eq + 1)));
        try {
            if (key == "scenario") {
                if (value == "csv") cfg.scenario.reset();
                else cfg.scenario = parse_scenario(value);
            } else if (key == "csv") {
                cfg.csv_path = value;
            } else if (key == "label_column") {
                cfg.label_column = value;
            } else if (key == "outlier_label") {
                cfg.outlier_label = value;
            } else if (key == "delimiter") {
                if (value == "tab") cfg.delimiter = '\t';
                else if (value == "comma") cfg.delimiter = ',';
                else if (value.size() == 1) cfg.delimiter = value[0];
                else throw IoError("delimiter must be a single character, 'tab' or 'comma'");
            } else if (key == "train_fraction") {
                cfg.train_fraction = parse_double(value);
            } else if (key == "p") {
                cfg.p_grid = parse_list<std::size_t>(value, [](const std::string& s) { return parse_size(s); });
            } else if (key == "n_k") {
                cfg.nk_grid = parse_list<std::size_t>(value, [](const std::string& s) { return parse_size(s); });
            } else if (key == "rho") {
                cfg.rho_grid = parse_list<double>(value, [](const std::string& s) { return parse_double(s); });
            } else if (key == "m") {
                cfg.m = parse_size(value);
            } else if (key == "correlation") {
                cfg.correlation = parse_correlation(value);
            } else if (key == "alpha") {
                cfg.alpha = parse_double(value);
            } else if (key == "replicates") {
                cfg.replicates = parse_size(value);
            } else if (key == "test_sets") {
                cfg.test_sets_per_run = parse_size(value);
            } else if (key == "atom_seed") {
                cfg.atom_seed = parse_u64(value);
            } else if (key == "seed") {
                cfg.master_seed = parse_u64(value);
            } else if (key == "mode") {
                cfg.mode = parse_run_mode(value);
                mode_set = true;
            } else if (key == "variance_floor") {
                cfg.variance_floor = parse_bool(value);
            } else if (key == "workers") {
                cfg.workers = parse_int(value);
            } else if (key == "out") {
                cfg.out = value;
            } else {
                throw IoError("unknown key '" + key + "'");
            }
        } catch (const Error& e) {
            throw IoError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    // a CSV source has no oracle, so it runs empirical unless told otherwise
    if (cfg.uses_csv() && !mode_set) cfg.mode = RunMode::empirical;
    cfg.check();
    return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

std::string to_config_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    const auto size_fmt = [](std::size_t v) { return std::to_string(v); };
    out << "scenario = " << (cfg.scenario ? to_string(*cfg.scenario) : std::string("csv")) << '\n';
    if (cfg.uses_csv()) {
        out << "csv = " << cfg.csv_path << '\n';
        out << "label_column = " << cfg.label_column << '\n';
        if (!cfg.outlier_label.empty()) out << "outlier_label = " << cfg.outlier_label << '\n';
        out << "delimiter = "
            << (cfg.delimiter == '\t' ? std::string("tab") : cfg.delimiter == ',' ? std::string("comma") : std::string(1, cfg.delimiter))
            << '\n';
        out << "train_fraction = " << format_double(cfg.train_fraction) << '\n';
    }
    out << "p = " << format_list(cfg.p_grid, size_fmt) << '\n';
    out << "n_k = " << format_list(cfg.nk_grid, size_fmt) << '\n';
    out << "rho = " << format_list(cfg.rho_grid, [](double v) { return format_double(v); }) << '\n';
    out << "m = " << cfg.m << '\n';
    out << "correlation = " << to_string(cfg.correlation) << '\n';
    out << "alpha = " << format_double(cfg.alpha) << '\n';
    out << "replicates = " << cfg.replicates << '\n';
    out << "test_sets = " << cfg.test_sets_per_run << '\n';
    out << "atom_seed = " << cfg.atom_seed << '\n';
    out << "seed = " << cfg.master_seed << '\n';
    out << "mode = " << to_string(cfg.mode) << '\n';
    out << "variance_floor = " << (cfg.variance_floor ? "true" : "false") << '\n';
    out << "workers = " << cfg.workers << '\n';
    out << "out = " << cfg.out << '\n';
    return out.str();
}

}  // namespace mmdcp::io
