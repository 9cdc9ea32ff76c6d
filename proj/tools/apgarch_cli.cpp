// Command-line front end: simulate, fit, test, mc-size, mc-power, stationarity.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "apgarch/apgarch.hpp"

namespace {

using apgarch::io::json;

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw apgarch::Error("cannot write " + path);
    out << text;
}

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

apgarch::PowerMode parse_mode(const std::string& s) {
    if (s == "known") return apgarch::PowerMode::KnownDelta;
    if (s == "estimated") return apgarch::PowerMode::EstimatedDelta;
    throw apgarch::DomainError("--delta-mode must be 'known' or 'estimated'");
}

struct SimulateOpts {
    std::string order, params, out;
    long n = 0, burn_in = 500;
    std::uint64_t seed = 0, stream = 0;
};

int run_simulate(const SimulateOpts& o) {
    const auto order = apgarch::io::parse_order(o.order);
    const auto params = apgarch::io::load_params_file(order, o.params);
    apgarch::RngStream rng(o.seed, o.stream);
    const auto y = apgarch::simulate(order, params, o.n, o.burn_in, rng);
    write_output(o.out, apgarch::io::series_to_csv(y));
    return 0;
}

struct DataOpts {
    std::string data, columns, transform = "log100", date_column = "Date";
};

apgarch::io::LoadedReturns load(const DataOpts& d) {
    apgarch::io::ReturnsConfig rc;
    rc.columns = split_names(d.columns);
    rc.transform = apgarch::io::parse_transform(d.transform);
    rc.date_column = d.date_column;
    return apgarch::io::load_returns_csv(d.data, rc);
}

struct FitOpts {
    DataOpts data;
    std::string order, delta_mode = "known", delta, out;
    int max_iters = 1000;
    double grad_tol = 1e-5;
};

int run_fit(const FitOpts& o) {
    const auto order = apgarch::io::parse_order(o.order, parse_mode(o.delta_mode));
    const auto lr = load(o.data);
    apgarch::FitConfig cfg;
    if (!o.delta.empty()) cfg.delta = apgarch::io::parse_vector(o.delta);
    cfg.max_iters = o.max_iters;
    cfg.grad_tol = o.grad_tol;
    const auto fr = apgarch::fit(order, lr.values, cfg);
    json meta{{"data", o.data.data},
              {"columns", split_names(o.data.columns)},
              {"transform", o.data.transform},
              {"date_column", o.data.date_column},
              {"n_prices", lr.n_prices},
              {"dropped_rows", lr.dropped_rows}};
    const auto doc = apgarch::io::make_report(fr, {}, meta);
    write_output(o.out, apgarch::io::write_report(doc, apgarch::io::ReportFormat::Json));
    for (const auto& w : fr.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

struct TestOpts {
    std::string fit, data, method = "general", out, format, columns, transform, date_column;
    int m_max = 12;
    double alpha = 0.05;
};

int run_test(const TestOpts& o) {
    const json fj = apgarch::io::read_structured_file(o.fit);
    const auto doc_in = apgarch::io::report_from_json(fj);
    DataOpts d;
    d.data = o.data;
    d.columns = o.columns;
    if (d.columns.empty() && doc_in.meta.contains("columns")) {
        for (const auto& c : doc_in.meta["columns"]) d.columns += (d.columns.empty() ? "" : ",") + c.get<std::string>();
    }
    if (d.columns.empty()) throw apgarch::DomainError("no columns given and none recorded in the fit file");
    d.transform = !o.transform.empty() ? o.transform : doc_in.meta.value("transform", std::string("log100"));
    d.date_column = !o.date_column.empty() ? o.date_column : doc_in.meta.value("date_column", std::string("Date"));
    const auto lr = load(d);
    const auto fr = apgarch::evaluate_at(doc_in.order, doc_in.params_hat, lr.values);
    const auto method = o.method == "lingli" ? apgarch::DMethod::LingLiSimplified : apgarch::DMethod::General;
    if (o.method != "general" && o.method != "lingli") throw apgarch::DomainError("--method must be general or lingli");
    const auto rep = apgarch::diagnose(fr, lr.values, o.m_max, o.alpha, method);
    for (const auto& f : rep.failures) std::cerr << "warning: " << f << "\n";
    json meta = doc_in.meta;
    meta["data"] = o.data;
    meta["columns"] = split_names(d.columns);
    meta["transform"] = d.transform;
    meta["date_column"] = d.date_column;
    meta["alpha"] = o.alpha;
    meta["method"] = o.method;
    meta["kappa_hat"] = rep.series.kappa_hat;
    meta["singular_lags"] = rep.singular_lags;
    std::vector<double> r(rep.autocov.r_hat.begin(), rep.autocov.r_hat.end());
    std::vector<double> rho(rep.autocov.rho_hat.begin(), rep.autocov.rho_hat.end());
    meta["r_hat"] = r;
    meta["rho_hat"] = rho;
    auto doc = apgarch::io::make_report(fr, rep.tests, meta);
    doc.meta["converged"] = doc_in.meta.value("converged", true);
    doc.meta["iterations"] = doc_in.meta.value("iterations", 0);
    doc.meta["start"] = doc_in.meta.value("start", std::string("user"));
    const bool csv = o.format.empty() ? ends_with(o.out, ".csv") : o.format == "csv";
    write_output(o.out, apgarch::io::write_report(doc, csv ? apgarch::io::ReportFormat::CsvTable
                                                           : apgarch::io::ReportFormat::Json));
    return 0;
}

struct McOpts {
    std::string config, out, raw_json;
    std::optional<std::uint64_t> seed;
    int threads = -1;
};

int run_mc(const McOpts& o, bool power) {
    auto file = apgarch::io::mc_config_from_json(apgarch::io::read_structured_file(o.config));
    if (o.seed) {
        file.config.base_seed = *o.seed;
        file.has_seed = true;
    }
    if (!file.has_seed) throw apgarch::DomainError("a seed is required: set base_seed in the config or pass --seed");
    if (o.threads >= 0) file.config.threads = o.threads;
    const auto res = power ? apgarch::run_power_experiment(file.config) : apgarch::run_size_experiment(file.config);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    write_output(o.out, apgarch::io::mc_table_csv(file.config, res));
    if (!o.raw_json.empty()) write_output(o.raw_json, apgarch::io::mc_raw_json(file.config, res).dump(2) + "\n");
    std::cerr << "elapsed " << res.elapsed << " s\n";
    return 0;
}

struct StatOpts {
    std::string order, params;
    long products = 10000;
    std::uint64_t seed = 0;
};

int run_stationarity(const StatOpts& o) {
    const auto order = apgarch::io::parse_order(o.order);
    const auto params = apgarch::io::load_params_file(order, o.params);
    apgarch::RngStream rng(o.seed, 0);
    const auto est = apgarch::lyapunov_exponent(order, params, rng, o.products);
    json j{{"gamma_hat", std::isfinite(est.gamma_hat) ? json(est.gamma_hat) : json("-inf")},
           {"std_err", est.std_err},
           {"n_products", est.n_products},
           {"strictly_stationary", est.gamma_hat < 0.0}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CCC-APGARCH simulation, estimation and portmanteau tests"};
    app.require_subcommand(1);

    SimulateOpts so;
    auto* sim = app.add_subcommand("simulate", "simulate a path");
    sim->add_option("--order", so.order, "d,p,q")->required();
    sim->add_option("--params", so.params, "parameter file (TOML or JSON)")->required();
    sim->add_option("--n", so.n, "path length")->required()->check(CLI::PositiveNumber);
    sim->add_option("--burn-in", so.burn_in, "discarded initial values")->check(CLI::NonNegativeNumber);
    sim->add_option("--seed", so.seed, "random seed")->required();
    sim->add_option("--stream", so.stream, "stream id");
    sim->add_option("--out", so.out, "output CSV ('-' for stdout)")->required();

    FitOpts fo;
    auto* fitc = app.add_subcommand("fit", "quasi-maximum-likelihood fit");
    fitc->add_option("--data", fo.data.data, "CSV file")->required();
    fitc->add_option("--columns", fo.data.columns, "comma-separated column names")->required();
    fitc->add_option("--order", fo.order, "d,p,q")->required();
    fitc->add_option("--delta-mode", fo.delta_mode, "known|estimated")->required();
    fitc->add_option("--delta", fo.delta, "known power (or starting power), e.g. 1,1");
    fitc->add_option("--transform", fo.data.transform, "log100|log|raw");
    fitc->add_option("--date-column", fo.data.date_column, "date column name");
    fitc->add_option("--max-iters", fo.max_iters);
    fitc->add_option("--grad-tol", fo.grad_tol);
    fitc->add_option("--out", fo.out, "output JSON ('-' for stdout)")->required();

    TestOpts to;
    auto* test = app.add_subcommand("test", "portmanteau tests at a fitted parameter");
    test->add_option("--fit", to.fit, "fit report JSON")->required();
    test->add_option("--data", to.data, "CSV file")->required();
    test->add_option("--m-max", to.m_max, "largest lag")->check(CLI::PositiveNumber);
    test->add_option("--alpha", to.alpha, "level for the bands");
    test->add_option("--method", to.method, "general|lingli");
    test->add_option("--columns", to.columns, "override the recorded columns");
    test->add_option("--transform", to.transform, "override the recorded transform");
    test->add_option("--date-column", to.date_column, "override the recorded date column");
    test->add_option("--format", to.format, "json|csv (default: from the --out extension)");
    test->add_option("--out", to.out, "output file, .json or .csv")->required();

    McOpts mo;
    auto* mcs = app.add_subcommand("mc-size", "Monte Carlo size experiment");
    auto* mcp = app.add_subcommand("mc-power", "Monte Carlo power experiment");
    for (auto* c : {mcs, mcp}) {
        c->add_option("--config", mo.config, "TOML configuration")->required();
        c->add_option("--out", mo.out, "rejection table CSV")->required();
        c->add_option("--raw-json", mo.raw_json, "per-replication statistics");
        c->add_option("--seed", mo.seed, "overrides base_seed");
        c->add_option("--threads", mo.threads, "worker threads (0: all cores)");
    }

    StatOpts st;
    auto* stat = app.add_subcommand("stationarity", "top Lyapunov exponent");
    stat->add_option("--order", st.order, "d,p,q")->required();
    stat->add_option("--params", st.params, "parameter file")->required();
    stat->add_option("--products", st.products, "number of random matrices");
    stat->add_option("--seed", st.seed, "random seed")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim->parsed()) return run_simulate(so);
        if (fitc->parsed()) return run_fit(fo);
        if (test->parsed()) return run_test(to);
        if (mcs->parsed()) return run_mc(mo, false);
        if (mcp->parsed()) return run_mc(mo, true);
        if (stat->parsed()) return run_stationarity(st);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
