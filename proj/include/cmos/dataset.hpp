#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmos {

/// An in-memory multivariate series: T steps by N channels, row-major.
/// Immutable after load; every cell is finite.
struct Dataset {
    std::string name;
    std::string sample_interval;  // free-form label, e.g. "1h"; may be empty
    std::vector<std::string> channel_names;
    std::size_t steps = 0;     // T
    std::size_t channels = 0;  // N
    std::vector<double> values;
    bool had_date_column = false;

    double at(std::size_t t, std::size_t n) const { return values[t * channels + n]; }
    double& at(std::size_t t, std::size_t n) { return values[t * channels + n]; }
};

struct SplitSpec {
    double train_ratio = 0.7;
    double val_ratio = 0.1;
    double test_ratio = 0.2;
    std::string style = "standard";

    // ETT-family convention: 6:2:2. Everything else: 7:1:2.
    static SplitSpec ett() { return {0.6, 0.2, 0.2, "ETT"}; }
    static SplitSpec standard() { return {0.7, 0.1, 0.2, "standard"}; }

    static SplitSpec by_name(const std::string& s) {
        if (s == "ETT" || s == "ett") return ett();
        if (s == "standard") return standard();
        throw std::invalid_argument("unknown split style '" + s + "' (expected 'ETT' or 'standard')");
    }

    void validate() const {
        if (train_ratio <= 0 || val_ratio <= 0 || test_ratio <= 0)
            throw std::invalid_argument("split ratios must be positive");
        if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-12)
            throw std::invalid_argument("split ratios must sum to 1");
    }
};

/// Half-open target zone of one split. Windows for the zone must place their
/// target inside [target_begin, target_end); eval-split lookbacks may reach
/// back into the preceding split.
struct SplitRange {
    std::size_t target_begin = 0;
    std::size_t target_end = 0;

    std::size_t length() const { return target_end - target_begin; }
};

struct SplitRanges {
    SplitRange train, val, test;
};

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool parse_double(const std::string& field, double& out) {
    const char* begin = field.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end != '\0') {
        if (!std::isspace(static_cast<unsigned char>(*end))) return false;
        ++end;
    }
    return std::isfinite(out);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

/// Load a comma-separated file with a header row. A date column is detected
/// by name ("date"/"timestamp", case-insensitive) or by a non-numeric first
/// data row, and is dropped from the values.
inline Dataset load_csv(const std::string& path,
                        std::optional<std::string> date_column = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file (header row required)");
    const std::vector<std::string> header = detail::split_csv_line(line);
    const std::size_t total_cols = header.size();

    std::vector<std::string> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) rows.push_back(line);
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    // Identify the date column, if any.
    std::optional<std::size_t> date_idx;
    for (std::size_t c = 0; c < total_cols; ++c) {
        const std::string name = detail::lower(header[c]);
        if (date_column ? (header[c] == *date_column) : (name == "date" || name == "timestamp")) {
            date_idx = c;
            break;
        }
    }
    if (!date_idx) {
        const std::vector<std::string> first = detail::split_csv_line(rows[0]);
        double tmp;
        for (std::size_t c = 0; c < std::min(first.size(), total_cols); ++c) {
            if (!detail::parse_double(first[c], tmp)) {
                date_idx = c;
                break;
            }
        }
    }

    Dataset ds;
    ds.name = path;
    {
        const std::size_t slash = path.find_last_of("/\\");
        std::string base = (slash == std::string::npos) ? path : path.substr(slash + 1);
        const std::size_t dot = base.find_last_of('.');
        if (dot != std::string::npos) base = base.substr(0, dot);
        if (!base.empty()) ds.name = base;
    }
    ds.had_date_column = date_idx.has_value();
    for (std::size_t c = 0; c < total_cols; ++c)
        if (!date_idx || c != *date_idx) ds.channel_names.push_back(header[c]);
    ds.channels = ds.channel_names.size();
    if (ds.channels == 0) throw std::runtime_error(path + ": zero numeric columns");

    ds.steps = rows.size();
    ds.values.resize(ds.steps * ds.channels);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::vector<std::string> fields = detail::split_csv_line(rows[r]);
        if (fields.size() != total_cols)
            throw std::runtime_error(path + ": row " + std::to_string(r + 2) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(total_cols));
        std::size_t n = 0;
        for (std::size_t c = 0; c < total_cols; ++c) {
            if (date_idx && c == *date_idx) continue;
            double v;
            if (!detail::parse_double(fields[c], v))
                throw std::runtime_error(path + ": non-numeric cell at row " + std::to_string(r + 2) +
                                         ", column '" + header[c] + "'");
            ds.values[r * ds.channels + n] = v;
            ++n;
        }
    }
    return ds;
}

/// Partition [0, T) into contiguous train/val/test target zones. The train
/// zone is the first floor(train_ratio * T) steps; val and test follow.
inline SplitRanges split(const Dataset& ds, const SplitSpec& spec, std::size_t lookback_len,
                         std::size_t horizon_len = 1) {
    spec.validate();
    const std::size_t T = ds.steps;
    const auto n_train = static_cast<std::size_t>(spec.train_ratio * static_cast<double>(T));
    const auto n_val = static_cast<std::size_t>(spec.val_ratio * static_cast<double>(T));
    if (n_train + n_val >= T) throw std::runtime_error("dataset too short for the requested split");

    SplitRanges r;
    r.train = {0, n_train};
    r.val = {n_train, n_train + n_val};
    r.test = {n_train + n_val, T};

    // Every split must admit at least one (L, H) window; train windows are
    // fully interior, eval lookbacks may borrow from the preceding split.
    if (n_train < lookback_len + horizon_len)
        throw std::runtime_error("train split too short for any (lookback, horizon) window");
    if (r.val.length() < horizon_len || r.test.length() < horizon_len)
        throw std::runtime_error("val/test split too short for any horizon window");
    return r;
}

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;           // population std over the train zone
    std::vector<std::size_t> clamped;     // channels whose std was clamped to 1
};

/// Standardize every channel with statistics from the train zone. Constant
/// channels get their std clamped to 1 and are reported in `clamped`.
inline ChannelStats standardize(Dataset& ds, const SplitRange& train) {
    if (train.length() == 0) throw std::runtime_error("standardize: empty train range");
    const std::size_t N = ds.channels;
    ChannelStats stats;
    stats.mean.assign(N, 0.0);
    stats.stddev.assign(N, 1.0);
    const auto count = static_cast<double>(train.length());
    for (std::size_t n = 0; n < N; ++n) {
        double sum = 0.0;
        for (std::size_t t = train.target_begin; t < train.target_end; ++t) sum += ds.at(t, n);
        const double mu = sum / count;
        double ss = 0.0;
        for (std::size_t t = train.target_begin; t < train.target_end; ++t) {
            const double d = ds.at(t, n) - mu;
            ss += d * d;
        }
        double sd = std::sqrt(ss / count);
        if (sd <= 0.0) {
            sd = 1.0;
            stats.clamped.push_back(n);
        }
        stats.mean[n] = mu;
        stats.stddev[n] = sd;
    }
    for (std::size_t t = 0; t < ds.steps; ++t)
        for (std::size_t n = 0; n < N; ++n)
            ds.at(t, n) = (ds.at(t, n) - stats.mean[n]) / stats.stddev[n];
    return stats;
}

/// Copy of one channel as a standalone single-channel dataset.
inline Dataset select_channel(const Dataset& ds, std::size_t channel) {
    Dataset out;
    out.name = ds.name + ":" + ds.channel_names[channel];
    out.sample_interval = ds.sample_interval;
    out.channel_names = {ds.channel_names[channel]};
    out.steps = ds.steps;
    out.channels = 1;
    out.values.resize(ds.steps);
    for (std::size_t t = 0; t < ds.steps; ++t) out.values[t] = ds.at(t, channel);
    out.had_date_column = ds.had_date_column;
    return out;
}

}  // namespace cmos
