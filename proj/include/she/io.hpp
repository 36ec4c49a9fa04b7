#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "she/errors.hpp"
#include "she/grid.hpp"
#include "she/nonlinearity.hpp"

namespace she {

/// 17-significant-digit float formatting: round-trips every double exactly
/// and keeps CSV output byte-reproducible.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse number '" + s + "' for " + what);
    }
}

inline std::int64_t parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse integer '" + s + "' for " + what);
    }
}

// ---------------------------------------------------------------------------
// key=value documents
// ---------------------------------------------------------------------------

/// Ordered key=value document ('#' starts a comment, blank lines skipped).
/// Keeps line numbers for error reporting.
class KeyValueDoc {
public:
    KeyValueDoc() = default;

    static KeyValueDoc parse_string(const std::string& text) {
        KeyValueDoc doc;
        std::istringstream in(text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            // trim
            const auto b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            const auto e = line.find_last_not_of(" \t\r");
            line = line.substr(b, e - b + 1);
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": expected key=value, got '" + line + "'");
            std::string key = line.substr(0, eq);
            std::string val = line.substr(eq + 1);
            const auto ke = key.find_last_not_of(" \t");
            key = key.substr(0, ke + 1);
            const auto vb = val.find_first_not_of(" \t");
            val = vb == std::string::npos ? "" : val.substr(vb);
            doc.set(key, val);
        }
        return doc;
    }

    static KeyValueDoc parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str());
    }

    void set(const std::string& key, const std::string& val) {
        if (map_.count(key) == 0) order_.push_back(key);
        map_[key] = val;
    }
    void set_double(const std::string& key, double v) { set(key, fmt_double(v)); }
    void set_int(const std::string& key, std::int64_t v) { set(key, std::to_string(v)); }

    bool has(const std::string& key) const { return map_.count(key) > 0; }
    const std::string& get(const std::string& key) const {
        auto it = map_.find(key);
        if (it == map_.end()) throw ConfigError("missing config key '" + key + "'");
        return it->second;
    }
    std::string get_or(const std::string& key, const std::string& fallback) const {
        auto it = map_.find(key);
        return it == map_.end() ? fallback : it->second;
    }
    double get_double(const std::string& key) const { return parse_double(get(key), key); }
    double get_double_or(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }
    std::int64_t get_int(const std::string& key) const { return parse_int(get(key), key); }
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::string serialize() const {
        std::string out;
        for (const auto& k : order_) {
            out += k;
            out += '=';
            out += map_.at(k);
            out += '\n';
        }
        return out;
    }

    void write_file(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot write " + path);
        out << serialize();
    }

    const std::vector<std::string>& keys() const { return order_; }

private:
    std::map<std::string, std::string> map_;
    std::vector<std::string> order_;
};

// ---------------------------------------------------------------------------
// NonlinearitySpec serialization (exact round-trip)
// ---------------------------------------------------------------------------

inline void spec_to_keyvalues(const NonlinearitySpec& spec, KeyValueDoc& doc) {
    switch (spec.family()) {
    case SigmaFamily::power_law:
        doc.set("family", "powerlaw");
        doc.set_double("gamma", spec.gamma());
        break;
    case SigmaFamily::log_corrected:
        doc.set("family", "logcorrected");
        doc.set_double("beta", spec.beta());
        doc.set_double("gamma2", spec.gamma2());
        break;
    case SigmaFamily::linear:
        doc.set("family", "linear");
        doc.set_double("c", spec.linear_c());
        break;
    case SigmaFamily::tabulated: {
        doc.set("family", "tabulated");
        std::string tbl;
        for (const auto& [u, s] : spec.table()) {
            if (!tbl.empty()) tbl += ',';
            tbl += fmt_double(u) + ":" + fmt_double(s);
        }
        doc.set("table", tbl);
        break;
    }
    }
    doc.set_double("d", spec.d());
    doc.set_double("L_d", spec.lipschitz_above_d());
    if (spec.truncation()) doc.set_int("m", *spec.truncation());
    if (spec.rescale()) {
        doc.set_double("eta", spec.rescale()->eta);
        doc.set_int("k", spec.rescale()->k);
    }
}

inline std::string spec_to_string(const NonlinearitySpec& spec) {
    KeyValueDoc doc;
    spec_to_keyvalues(spec, doc);
    return doc.serialize();
}

inline NonlinearitySpec spec_from_keyvalues(const KeyValueDoc& doc) {
    const std::string family = doc.get("family");
    NonlinearitySpec spec = [&]() {
        if (family == "powerlaw") return NonlinearitySpec::power_law(doc.get_double("gamma"));
        if (family == "logcorrected")
            return NonlinearitySpec::log_corrected(doc.get_double("beta"),
                                                   doc.get_double_or("gamma2", 0.0));
        if (family == "linear") return NonlinearitySpec::linear(doc.get_double("c"));
        if (family == "tabulated") {
            std::vector<std::pair<double, double>> pts;
            std::istringstream in(doc.get("table"));
            std::string item;
            while (std::getline(in, item, ',')) {
                const auto colon = item.find(':');
                if (colon == std::string::npos)
                    throw ConfigError("tabulated entry '" + item + "' must be u:sigma");
                pts.emplace_back(parse_double(item.substr(0, colon), "table u"),
                                 parse_double(item.substr(colon + 1), "table sigma"));
            }
            return NonlinearitySpec::tabulated(std::move(pts));
        }
        throw ConfigError("unknown nonlinearity family '" + family + "'");
    }();
    if (doc.has("eta") || doc.has("k")) {
        spec = spec.with_rescale(doc.get_double("eta"), static_cast<int>(doc.get_int("k")));
    }
    if (doc.has("m")) spec = spec.with_truncation(static_cast<int>(doc.get_int("m")));
    // d/L_d overrides only when they differ from the derived values
    if (doc.has("d") && doc.has("L_d")) {
        const double d = doc.get_double("d");
        const double lip = doc.get_double("L_d");
        if (d != spec.d() || lip != spec.lipschitz_above_d()) spec = spec.with_threshold(d, lip);
    }
    return spec;
}

inline NonlinearitySpec spec_from_string(const std::string& text) {
    return spec_from_keyvalues(KeyValueDoc::parse_string(text));
}

// ---------------------------------------------------------------------------
// CSV writer
// ---------------------------------------------------------------------------

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw ConfigError("cannot write " + path);
    }

    void header(const std::vector<std::string>& cols) { row_strings(cols); }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    /// Mixed row: strings pass through, doubles use fmt_double.
    class RowBuilder {
    public:
        explicit RowBuilder(CsvWriter& w) : w_(w) {}
        RowBuilder& add(const std::string& s) { cells_.push_back(s); return *this; }
        RowBuilder& add(double v) { cells_.push_back(fmt_double(v)); return *this; }
        RowBuilder& add(std::int64_t v) { cells_.push_back(std::to_string(v)); return *this; }
        RowBuilder& add(int v) { cells_.push_back(std::to_string(v)); return *this; }
        ~RowBuilder() { w_.row_strings(cells_); }

    private:
        CsvWriter& w_;
        std::vector<std::string> cells_;
    };

    RowBuilder row() { return RowBuilder(*this); }

private:
    std::ofstream out_;
};

/// Snapshot CSV: header "t,x0,x1,..." then one row per snapshot.
inline void write_snapshot_csv(const std::string& path, const Trajectory& traj) {
    CsvWriter csv(path);
    std::vector<std::string> head;
    head.push_back("t");
    for (int i = 0; i <= traj.grid.n_x; ++i) head.push_back(fmt_double(traj.grid.node(i)));
    csv.header(head);
    for (const auto& f : traj.snapshots) {
        std::vector<std::string> cells;
        cells.reserve(f.values.size() + 1);
        cells.push_back(fmt_double(f.t));
        for (double v : f.values) cells.push_back(fmt_double(v));
        csv.row_strings(cells);
    }
}

} // namespace she
