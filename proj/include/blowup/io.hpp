#pragma once

// Serialization and run configuration: JSON records for states, chart points
// and expansions; CSV emission with a provenance comment; a flat sectioned
// key-value config file with BLOWUPLAB_ environment overrides and an FNV-1a
// content hash for reproducibility.

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "blowup/charts.hpp"
#include "blowup/manifolds.hpp"
#include "blowup/model.hpp"

namespace blowup::io {

using nlohmann::json;

inline json to_json(const model::GalerkinState& s, const model::ModelParams& p) {
    json j;
    j["k0"] = p.k0;
    j["mu"] = p.mu;
    j["a"] = p.a;
    j["eps"] = p.eps;
    j["u"] = s.u;
    j["v"] = s.v;
    return j;
}

inline std::string csv_row(const model::GalerkinState& s, const model::ModelParams& p) {
    std::ostringstream os;
    os.precision(17);
    os << p.k0 << "," << p.mu << "," << p.a << "," << p.eps;
    for (double x : s.u) os << "," << x;
    for (double x : s.v) os << "," << x;
    return os.str();
}

inline std::string csv_header(int k0) {
    std::ostringstream os;
    os << "k0,mu,a,eps";
    for (int k = 1; k <= k0; ++k) os << ",u_" << k;
    for (int k = 1; k <= k0; ++k) os << ",v_" << k;
    return os.str();
}

inline json to_json(const charts::ChartPoint& p) {
    json j;
    j["chart"] = charts::chart_name(p.chart);
    j["r"] = p.r;
    if (p.chart != charts::Chart::K2) j["eps_i"] = p.eps;
    j["a_i"] = p.a;
    json fm;
    if (p.chart == charts::Chart::K2) fm["u12"] = p.ufirst;
    fm[p.chart == charts::Chart::K1 ? "v11" : (p.chart == charts::Chart::K3 ? "v13" : "v12")] = p.vfirst;
    j["first_mode"] = fm;
    j["modes_u"] = p.mu;
    j["modes_v"] = p.mv;
    return j;
}

inline json to_json(const manifolds::ManifoldExpansion& e) {
    json j;
    j["chart"] = charts::chart_name(e.chart);
    j["base_point"] = e.base_point;
    j["k0"] = e.k0;
    json coeffs = json::array();
    for (size_t r = 0; r < e.rows.size(); ++r) {
        for (const auto& [m, c] : e.rows[r]) {
            json term;
            term["graph_var"] = e.graph_names[r];
            json mono = json::array();
            if (m.degree() == 1) {
                mono.push_back({{"var", e.center_names[size_t(m.i)]}, {"power", 1}});
            } else if (m.degree() == 2) {
                if (m.i == m.j) {
                    mono.push_back({{"var", e.center_names[size_t(m.i)]}, {"power", 2}});
                } else {
                    mono.push_back({{"var", e.center_names[size_t(m.i)]}, {"power", 1}});
                    mono.push_back({{"var", e.center_names[size_t(m.j)]}, {"power", 1}});
                }
            }
            term["monomial"] = mono;
            term["value"] = c;
            coeffs.push_back(term);
        }
    }
    j["coeffs"] = coeffs;
    return j;
}

// ---------------------------------------------------------------------------
// Config file: flat sections of key = value lines, '#' comments.

class Config {
  public:
    Config() = default;

    static Config parse(const std::string& text) {
        Config cfg;
        cfg.raw_ = text;
        std::istringstream is(text);
        std::string line, section;
        while (std::getline(is, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[' && line.back() == ']') {
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("config: expected key = value: " + line);
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            cfg.values_[section + "." + key] = val;
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::invalid_argument("config: cannot open " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str());
    }

    /// BLOWUPLAB_SECTION_KEY=value overrides [section] key.
    void apply_env_overrides(char** envp = nullptr) {
        (void)envp;
        for (auto& [k, v] : values_) {
            std::string env = "BLOWUPLAB_" + k;
            for (auto& c : env) {
                if (c == '.') c = '_';
                c = char(std::toupper(static_cast<unsigned char>(c)));
            }
            if (const char* e = std::getenv(env.c_str())) v = e;
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_str(const std::string& key, const std::string& dflt) const {
        auto it = values_.find(key);
        return it == values_.end() ? dflt : it->second;
    }
    double get(const std::string& key, double dflt) const {
        auto it = values_.find(key);
        return it == values_.end() ? dflt : std::stod(it->second);
    }
    long get_long(const std::string& key, long dflt) const {
        auto it = values_.find(key);
        return it == values_.end() ? dflt : std::stol(it->second);
    }
    std::vector<double> get_list(const std::string& key, std::vector<double> dflt) const {
        auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        std::vector<double> out;
        std::istringstream is(it->second);
        std::string tok;
        while (std::getline(is, tok, ',')) out.push_back(std::stod(trim(tok)));
        return out;
    }
    std::vector<int> get_int_list(const std::string& key, std::vector<int> dflt) const {
        auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        std::vector<int> out;
        std::istringstream is(it->second);
        std::string tok;
        while (std::getline(is, tok, ',')) out.push_back(int(std::stol(trim(tok))));
        return out;
    }

    /// FNV-1a over the canonicalized (sorted, overridden) key-value set.
    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&h](const std::string& s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 1099511628211ULL;
            }
        };
        for (const auto& [k, v] : values_) {
            mix(k);
            mix("=");
            mix(v);
            mix(";");
        }
        return h;
    }
    std::string hash_hex() const {
        std::ostringstream os;
        os << std::hex << hash();
        return os.str();
    }

  private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }
    std::map<std::string, std::string> values_;
    std::string raw_;
};

// ---------------------------------------------------------------------------
// CSV with a provenance comment line.

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& header, const std::string& config_hash)
        : out_(path) {
        if (!out_) throw std::runtime_error("csv: cannot open " + path);
        out_ << "# blowuplab config-hash=" << config_hash << "\n";
        out_ << header << "\n";
        out_.precision(17);
    }

    template <class... Ts>
    void row(Ts&&... fields) {
        bool first = true;
        ((out_ << (first ? (first = false, "") : ",") << fields), ...);
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

}  // namespace blowup::io
