#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "apgarch/errors.hpp"
#include "apgarch/experiments.hpp"
#include "apgarch/filter.hpp"
#include "apgarch/model.hpp"
#include "apgarch/portmanteau.hpp"
#include "apgarch/qmle.hpp"

namespace apgarch::io {

using json = nlohmann::json;

enum class Transform { LogReturnTimes100, LogReturn, Raw };

struct ReturnsConfig {
    std::vector<std::string> columns;
    Transform transform = Transform::LogReturnTimes100;
    std::string date_column = "Date";
};

struct LoadedReturns {
    SeriesMatrix values;
    std::vector<std::string> dates; ///< date of each output row
    std::size_t n_prices = 0;       ///< rows kept before differencing
    std::size_t dropped_rows = 0;   ///< rows with a missing value
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

/// Locale-independent strict parse; false when the cell is not a complete number.
inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

inline bool is_missing(const std::string& s) { return s.empty() || s == "N/A" || s == "NA" || s == "NaN" || s == "nan"; }

inline std::string fixed(double x, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    std::string s(buf);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1); // no "-0.000"
    return s;
}

} // namespace detail

/**
 * @brief Reads a price table and turns the requested columns into returns.
 *
 * Rows are sorted ascending by the date column (numerically when every date is a
 * number). Rows where any requested cell is missing ("N/A" or empty) are dropped before
 * differencing; any other non-numeric cell is a ParseError.
 */
[[nodiscard]] inline LoadedReturns load_returns_csv(const std::string& path, const ReturnsConfig& cfg) {
    if (cfg.columns.empty()) throw DomainError("load_returns_csv: no columns requested");
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw EmptySeries("empty file: " + path);
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
    std::vector<std::string> header = detail::split_csv_line(line);
    for (auto& h : header) h = detail::trim(h);
    auto find_col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw MissingColumn("column '" + name + "' not found in " + path);
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t date_idx = find_col(cfg.date_column);
    std::vector<std::size_t> idx;
    for (const auto& c : cfg.columns) idx.push_back(find_col(c));

    struct Row {
        std::string date;
        std::vector<double> v;
    };
    std::vector<Row> rows;
    LoadedReturns out;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        Row r;
        r.date = date_idx < cells.size() ? detail::trim(cells[date_idx]) : std::string();
        bool missing = false;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const std::string cell = idx[k] < cells.size() ? detail::trim(cells[idx[k]]) : std::string();
            if (detail::is_missing(cell)) {
                missing = true;
                continue;
            }
            double x = 0.0;
            if (!detail::parse_double(cell, x)) throw ParseError(row_no, cfg.columns[k], "not a number: '" + cell + "'");
            if (cfg.transform != Transform::Raw && !(x > 0.0))
                throw ParseError(row_no, cfg.columns[k], "price must be positive for log returns");
            r.v.push_back(x);
        }
        if (missing) {
            ++out.dropped_rows;
            continue;
        }
        rows.push_back(std::move(r));
    }
    bool numeric_dates = !rows.empty();
    for (const auto& r : rows) {
        double x;
        numeric_dates = numeric_dates && detail::parse_double(r.date, x);
    }
    if (numeric_dates) {
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            double x = 0, y = 0;
            detail::parse_double(a.date, x);
            detail::parse_double(b.date, y);
            return x < y;
        });
    } else {
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
    }
    out.n_prices = rows.size();
    const Eigen::Index d = static_cast<Eigen::Index>(idx.size());
    if (cfg.transform == Transform::Raw) {
        if (rows.empty()) throw EmptySeries("no complete rows in " + path);
        out.values.resize(static_cast<Eigen::Index>(rows.size()), d);
        for (std::size_t t = 0; t < rows.size(); ++t) {
            for (Eigen::Index k = 0; k < d; ++k) out.values(t, k) = rows[t].v[k];
            out.dates.push_back(rows[t].date);
        }
        return out;
    }
    if (rows.size() < 2) throw EmptySeries("fewer than two complete rows in " + path);
    const double scale = cfg.transform == Transform::LogReturnTimes100 ? 100.0 : 1.0;
    out.values.resize(static_cast<Eigen::Index>(rows.size() - 1), d);
    for (std::size_t t = 1; t < rows.size(); ++t) {
        for (Eigen::Index k = 0; k < d; ++k) out.values(t - 1, k) = scale * std::log(rows[t].v[k] / rows[t - 1].v[k]);
        out.dates.push_back(rows[t].date);
    }
    return out;
}

[[nodiscard]] inline Transform parse_transform(const std::string& s) {
    if (s == "log100" || s == "log-return-100") return Transform::LogReturnTimes100;
    if (s == "log" || s == "log-return") return Transform::LogReturn;
    if (s == "raw") return Transform::Raw;
    throw DomainError("unknown transform '" + s + "' (expected log100, log or raw)");
}

[[nodiscard]] inline std::string transform_name(Transform t) {
    switch (t) {
    case Transform::LogReturnTimes100: return "log100";
    case Transform::LogReturn: return "log";
    case Transform::Raw: return "raw";
    }
    return "log100";
}

// ---------------------------------------------------------------------------
// parameters and model descriptors

[[nodiscard]] inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

[[nodiscard]] inline json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

[[nodiscard]] inline Vector json_to_vector(const json& j, const std::string& what) {
    if (!j.is_array()) throw DomainError("'" + what + "' must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw DomainError("'" + what + "' must be an array of numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

/// A d x d matrix given either as rows [[..],[..]] or as a flat row-major list.
[[nodiscard]] inline Matrix json_to_matrix(const json& j, int d, const std::string& what) {
    Matrix m(d, d);
    if (!j.is_array()) throw DomainError("'" + what + "' must be a matrix");
    if (j.size() == static_cast<std::size_t>(d) && j[0].is_array()) {
        for (int r = 0; r < d; ++r) {
            const Vector row = json_to_vector(j[r], what);
            if (row.size() != d) throw DomainError("'" + what + "' has a row of the wrong length");
            m.row(r) = row.transpose();
        }
        return m;
    }
    const Vector flat = json_to_vector(j, what);
    if (flat.size() != d * d) throw DomainError("'" + what + "' must have d*d entries");
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) m(r, c) = flat(r * d + c);
    return m;
}

[[nodiscard]] inline json params_to_json(const Params& p) {
    json j;
    j["omega"] = vector_to_json(p.omega);
    auto list = [](const std::vector<Matrix>& ms) {
        json a = json::array();
        for (const auto& m : ms) a.push_back(matrix_to_json(m));
        return a;
    };
    j["a_plus"] = list(p.a_plus);
    j["a_minus"] = list(p.a_minus);
    j["b"] = list(p.b);
    j["rho"] = vector_to_json(p.rho);
    j["delta"] = vector_to_json(p.delta);
    return j;
}

[[nodiscard]] inline Params params_from_json(const ModelOrder& order, const json& j) {
    Params p = zero_params(order);
    const int d = order.d;
    if (!j.is_object()) throw DomainError("parameters must be a table/object");
    if (!j.contains("omega")) throw DomainError("parameters: 'omega' is required");
    p.omega = json_to_vector(j.at("omega"), "omega");
    auto list = [&](const char* key, int count) {
        std::vector<Matrix> ms;
        if (!j.contains(key)) {
            if (count > 0) throw DomainError(std::string("parameters: '") + key + "' is required");
            return ms;
        }
        const json& a = j.at(key);
        if (!a.is_array() || static_cast<int>(a.size()) != count)
            throw DomainError(std::string("parameters: '") + key + "' must list " + std::to_string(count) + " matrices");
        for (int i = 0; i < count; ++i) ms.push_back(json_to_matrix(a[i], d, key));
        return ms;
    };
    p.a_plus = list("a_plus", order.q);
    p.a_minus = list("a_minus", order.q);
    p.b = list("b", order.p);
    if (j.contains("rho")) p.rho = json_to_vector(j.at("rho"), "rho");
    else if (d > 1) throw DomainError("parameters: 'rho' is required when d > 1");
    if (j.contains("delta")) p.delta = json_to_vector(j.at("delta"), "delta");
    check_shapes(order, p);
    return p;
}

/// TOML table converted to JSON through toml++'s formatter.
[[nodiscard]] inline json toml_to_json(const toml::table& tbl) {
    std::stringstream ss;
    ss << toml::json_formatter{tbl};
    return json::parse(ss.str());
}

[[nodiscard]] inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// JSON or TOML document, chosen by extension (.json) or a leading '{'.
[[nodiscard]] inline json read_structured_file(const std::string& path) {
    const std::string text = slurp(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    const bool is_json = (path.size() >= 5 && path.substr(path.size() - 5) == ".json") ||
                         (first != std::string::npos && text[first] == '{');
    try {
        if (is_json) return json::parse(text);
        return toml_to_json(toml::parse(text, path));
    } catch (const json::exception& e) {
        throw Error("cannot parse " + path + ": " + e.what());
    } catch (const toml::parse_error& e) {
        throw Error("cannot parse " + path + ": " + std::string(e.description()));
    }
}

[[nodiscard]] inline Params load_params_file(const ModelOrder& order, const std::string& path) {
    return params_from_json(order, read_structured_file(path));
}

[[nodiscard]] inline json order_to_json(const ModelOrder& o) {
    return json{{"d", o.d}, {"p", o.p}, {"q", o.q}, {"power_mode", o.estimated_delta() ? "estimated" : "known"}};
}

[[nodiscard]] inline ModelOrder order_from_json(const json& j) {
    ModelOrder o;
    o.d = j.at("d").get<int>();
    o.p = j.at("p").get<int>();
    o.q = j.at("q").get<int>();
    const std::string mode = j.value("power_mode", "known");
    if (mode != "known" && mode != "estimated") throw DomainError("power_mode must be 'known' or 'estimated'");
    o.power_mode = mode == "estimated" ? PowerMode::EstimatedDelta : PowerMode::KnownDelta;
    o.check();
    return o;
}

/// "d,p,q" as used on the command line.
[[nodiscard]] inline ModelOrder parse_order(const std::string& s, PowerMode mode = PowerMode::KnownDelta) {
    std::vector<int> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        int x = 0;
        const auto t = detail::trim(tok);
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
        if (ec != std::errc() || ptr != t.data() + t.size()) throw DomainError("bad model order '" + s + "'");
        v.push_back(x);
    }
    if (v.size() != 3) throw DomainError("model order must be d,p,q");
    ModelOrder o{v[0], v[1], v[2], mode};
    o.check();
    return o;
}

[[nodiscard]] inline Vector parse_vector(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        double x = 0.0;
        if (!detail::parse_double(detail::trim(tok), x)) throw DomainError("bad number list '" + s + "'");
        v.push_back(x);
    }
    return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// ---------------------------------------------------------------------------
// reports

struct TestSummary {
    int m = 0;
    double stat_r = 0.0;
    double pvalue_r = 1.0;
    double stat_rho = 0.0;
    double pvalue_rho = 1.0;
    std::vector<double> bands;
};

struct ReportDocument {
    ModelOrder order;
    Params params_hat;
    std::vector<double> vcov_diag;
    double loglik_mean = 0.0;
    std::vector<TestSummary> tests;
    json meta = json::object();
};

[[nodiscard]] inline TestSummary summarize(const TestReport& t) {
    TestSummary s{t.m, t.stat_r, t.pvalue_r, t.stat_rho, t.pvalue_rho, {}};
    for (Eigen::Index h = 0; h < t.bands.size(); ++h) s.bands.push_back(t.bands(h));
    return s;
}

[[nodiscard]] inline ReportDocument make_report(const FitResult& fit, const std::vector<TestReport>& tests,
                                                json meta = json::object()) {
    ReportDocument doc;
    doc.order = fit.order;
    doc.params_hat = fit.params_hat;
    for (Eigen::Index i = 0; i < fit.vcov.rows(); ++i) doc.vcov_diag.push_back(fit.vcov(i, i));
    doc.loglik_mean = fit.loglik_mean;
    for (const auto& t : tests) doc.tests.push_back(summarize(t));
    meta["init_policy"] = fit.init.name();
    meta["start"] = fit.start;
    meta["converged"] = fit.converged;
    meta["iterations"] = fit.iterations;
    meta["n_used"] = fit.n_used;
    meta["objective"] = fit.objective;
    meta["param_names"] = param_names(fit.order);
    if (!fit.warnings.empty()) meta["warnings"] = fit.warnings;
    doc.meta = std::move(meta);
    return doc;
}

[[nodiscard]] inline json report_to_json(const ReportDocument& doc) {
    json j;
    j["model"] = order_to_json(doc.order);
    j["params_hat"] = params_to_json(doc.params_hat);
    j["vcov_diag"] = doc.vcov_diag;
    j["loglik_mean"] = doc.loglik_mean;
    j["tests"] = json::array();
    for (const auto& t : doc.tests)
        j["tests"].push_back({{"m", t.m},
                              {"stat_r", t.stat_r},
                              {"pvalue_r", t.pvalue_r},
                              {"stat_rho", t.stat_rho},
                              {"pvalue_rho", t.pvalue_rho},
                              {"bands", t.bands}});
    j["meta"] = doc.meta;
    return j;
}

[[nodiscard]] inline ReportDocument report_from_json(const json& j) {
    ReportDocument doc;
    doc.order = order_from_json(j.at("model"));
    doc.params_hat = params_from_json(doc.order, j.at("params_hat"));
    doc.vcov_diag = j.at("vcov_diag").get<std::vector<double>>();
    doc.loglik_mean = j.at("loglik_mean").get<double>();
    for (const auto& t : j.at("tests")) {
        TestSummary s;
        s.m = t.at("m").get<int>();
        s.stat_r = t.at("stat_r").get<double>();
        s.pvalue_r = t.at("pvalue_r").get<double>();
        s.stat_rho = t.at("stat_rho").get<double>();
        s.pvalue_rho = t.at("pvalue_rho").get<double>();
        s.bands = t.at("bands").get<std::vector<double>>();
        doc.tests.push_back(std::move(s));
    }
    doc.meta = j.value("meta", json::object());
    return doc;
}

enum class ReportFormat { Json, CsvTable };

/// Label such as "CCC-APGARCH(1,1)".
[[nodiscard]] inline std::string model_label(const ModelOrder& o) {
    return "CCC-APGARCH(" + std::to_string(o.p) + "," + std::to_string(o.q) + ")";
}

/**
 * @brief Deterministic serialization.
 *
 * CsvTable gives one header line and, when the report holds tests, one row with the
 * p-values per lag (3 decimals, NA for lags listed in meta.singular_lags), the power
 * vector and the mean criterion (1/n) sum l_t, which is the scale of Table-1 style
 * "Log-lik" columns.
 */
[[nodiscard]] inline std::string write_report(const ReportDocument& doc, ReportFormat format) {
    if (format == ReportFormat::Json) return report_to_json(doc).dump(2) + "\n";
    std::vector<int> singular;
    if (doc.meta.contains("singular_lags") && doc.meta["singular_lags"].is_array())
        singular = doc.meta["singular_lags"].get<std::vector<int>>();
    int m_top = 0;
    for (const auto& t : doc.tests) m_top = std::max(m_top, t.m);
    for (int m : singular) m_top = std::max(m_top, m);
    std::string out = "series,model";
    for (int m = 1; m <= m_top; ++m) out += "," + std::to_string(m);
    out += ",delta,loglik\n";
    if (m_top == 0) return out;
    std::string series = "series";
    if (doc.meta.contains("columns") && doc.meta["columns"].is_array()) {
        series = "(";
        for (std::size_t i = 0; i < doc.meta["columns"].size(); ++i)
            series += (i ? "," : "") + doc.meta["columns"][i].get<std::string>();
        series += ")";
    }
    out += "\"" + series + "\"," + model_label(doc.order);
    for (int m = 1; m <= m_top; ++m) {
        auto it = std::find_if(doc.tests.begin(), doc.tests.end(), [m](const TestSummary& t) { return t.m == m; });
        out += "," + (it != doc.tests.end() ? detail::fixed(it->pvalue_r, 3) : std::string("NA"));
    }
    std::string delta = "(";
    for (Eigen::Index i = 0; i < doc.params_hat.delta.size(); ++i)
        delta += (i ? "," : "") + detail::fixed(doc.params_hat.delta(i), 3);
    delta += ")";
    const double crit = doc.meta.contains("objective") ? doc.meta["objective"].get<double>() : -2.0 * doc.loglik_mean;
    out += ",\"" + delta + "\"," + detail::fixed(crit, 4) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo configuration and tables

struct McFile {
    McConfig config;
    bool has_seed = false;
};

/// Monte Carlo configuration from a TOML (or JSON) document; see the README for the keys.
[[nodiscard]] inline McFile mc_config_from_json(const json& j) {
    McFile f;
    McConfig& c = f.config;
    const json& dgp = j.at("dgp");
    const auto ov = dgp.at("order").get<std::vector<int>>();
    if (ov.size() != 3) throw DomainError("dgp.order must be [d, p, q]");
    c.dgp_order = ModelOrder{ov[0], ov[1], ov[2], PowerMode::KnownDelta};
    c.dgp_params = params_from_json(c.dgp_order, dgp);
    const json fitj = j.value("fit", json::object());
    std::vector<int> fv = fitj.contains("order") ? fitj.at("order").get<std::vector<int>>() : ov;
    if (fv.size() != 3) throw DomainError("fit.order must be [d, p, q]");
    const std::string mode = fitj.value("delta_mode", "known");
    if (mode != "known" && mode != "estimated") throw DomainError("fit.delta_mode must be 'known' or 'estimated'");
    c.fitted_order = ModelOrder{fv[0], fv[1], fv[2], mode == "estimated" ? PowerMode::EstimatedDelta : PowerMode::KnownDelta};
    if (fitj.contains("delta")) c.fit_delta = json_to_vector(fitj.at("delta"), "fit.delta");
    const std::string method = fitj.value("method", "general");
    if (method != "general" && method != "lingli") throw DomainError("fit.method must be 'general' or 'lingli'");
    c.method = method == "lingli" ? DMethod::LingLiSimplified : DMethod::General;
    c.max_iters = fitj.value("max_iters", c.max_iters);
    c.grad_tol = fitj.value("grad_tol", c.grad_tol);
    const json ex = j.value("experiment", json::object());
    c.n = ex.value("n", static_cast<Eigen::Index>(c.n));
    c.N = ex.value("replications", c.N);
    c.m_max = ex.value("m_max", c.m_max);
    if (ex.contains("alphas")) c.alphas = ex.at("alphas").get<std::vector<double>>();
    c.burn_in = ex.value("burn_in", static_cast<Eigen::Index>(c.burn_in));
    c.threads = ex.value("threads", c.threads);
    const json* seed = j.contains("base_seed") ? &j.at("base_seed") : (ex.contains("base_seed") ? &ex.at("base_seed") : nullptr);
    if (seed) {
        c.base_seed = seed->get<std::uint64_t>();
        f.has_seed = true;
    }
    return f;
}

[[nodiscard]] inline std::string delta_label(const Vector& delta) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", delta(i));
        s += (i ? "," : "") + std::string(buf);
    }
    return s + ")";
}

/// Rows (delta, n, alpha), columns m = 1..m_max, percentages with one decimal.
[[nodiscard]] inline std::string mc_table_csv(const McConfig& cfg, const McResult& res) {
    std::string out = "delta,n,alpha";
    for (int m = 1; m <= res.m_max; ++m) out += "," + std::to_string(m);
    out += ",n_ok,n_failed,ci_lo,ci_hi\n";
    for (std::size_t a = 0; a < res.alphas.size(); ++a) {
        out += "\"" + delta_label(cfg.dgp_params.delta) + "\"," + std::to_string(cfg.n) + "," +
               detail::fixed(100.0 * res.alphas[a], 1);
        for (int m = 0; m < res.m_max; ++m) out += "," + detail::fixed(res.rejection_freq(a, m), 1);
        out += "," + std::to_string(res.n_ok) + "," + std::to_string(res.n_failed_fits) + "," +
               detail::fixed(res.ci_bounds[a].first, 1) + "," + detail::fixed(res.ci_bounds[a].second, 1) + "\n";
    }
    return out;
}

[[nodiscard]] inline json mc_raw_json(const McConfig& cfg, const McResult& res) {
    json j;
    j["dgp_order"] = order_to_json(cfg.dgp_order);
    j["dgp_params"] = params_to_json(cfg.dgp_params);
    j["fitted_order"] = order_to_json(cfg.fitted_order);
    j["n"] = cfg.n;
    j["replications"] = cfg.N;
    j["base_seed"] = cfg.base_seed;
    j["alphas"] = res.alphas;
    j["n_failed_fits"] = res.n_failed_fits;
    j["warnings"] = res.warnings;
    json table = json::array();
    for (Eigen::Index a = 0; a < res.rejection_freq.rows(); ++a) {
        std::vector<double> row(res.rejection_freq.row(a).begin(), res.rejection_freq.row(a).end());
        table.push_back(row);
    }
    j["rejection_freq"] = table;
    json reps = json::array();
    for (const auto& r : res.replications) {
        json x{{"index", r.index}, {"ok", r.ok}};
        if (r.ok) {
            x["stat_r"] = std::vector<double>(r.stat_r.begin(), r.stat_r.end());
            x["pvalue_r"] = std::vector<double>(r.pvalue_r.begin(), r.pvalue_r.end());
            x["theta_hat"] = std::vector<double>(r.theta_hat.begin(), r.theta_hat.end());
            x["objective"] = r.objective;
            x["iterations"] = r.iterations;
        } else {
            x["error"] = r.error;
        }
        reps.push_back(std::move(x));
    }
    j["per_replication"] = std::move(reps);
    return j;
}

/// Simulated path as CSV with an integer time column "t" and columns e1..ed.
[[nodiscard]] inline std::string series_to_csv(const SeriesMatrix& y) {
    std::string out = "t";
    for (Eigen::Index k = 0; k < y.cols(); ++k) out += ",e" + std::to_string(k + 1);
    out += "\n";
    char buf[64];
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
        out += std::to_string(t + 1);
        for (Eigen::Index k = 0; k < y.cols(); ++k) {
            std::snprintf(buf, sizeof buf, ",%.17g", y(t, k));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

} // namespace apgarch::io
