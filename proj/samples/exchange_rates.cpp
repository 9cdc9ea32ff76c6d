// Fits several CCC-APGARCH orders to daily (USD, JPY) euro reference rates and prints
// the portmanteau p-values for lags 1..12.

#include <cstdio>
#include <iostream>
#include <string>

#include "apgarch/apgarch.hpp"

int main(int argc, char** argv) {
    using namespace apgarch;
    const std::string path = argc > 1 ? argv[1] : std::string(APGARCH_DATA_DIR) + "/ecb_eurofxref_usd_jpy_1999_2021.csv";
    io::ReturnsConfig rc;
    rc.columns = {"USD", "JPY"};
    const auto data = io::load_returns_csv(path, rc);
    std::printf("%zu prices, %ld returns\n", data.n_prices, static_cast<long>(data.values.rows()));

    struct Spec {
        int p, q;
        PowerMode mode;
        double delta;
    };
    const Spec specs[] = {{0, 1, PowerMode::KnownDelta, 1.0}, {0, 1, PowerMode::KnownDelta, 2.0},
                          {1, 1, PowerMode::KnownDelta, 1.0}, {1, 1, PowerMode::KnownDelta, 2.0},
                          {1, 1, PowerMode::EstimatedDelta, 2.0}};
    for (const auto& s : specs) {
        const ModelOrder order{2, s.p, s.q, s.mode};
        FitConfig cfg;
        cfg.delta = Vector::Constant(2, s.delta);
        try {
            const auto fr = fit(order, data.values, cfg);
            const auto rep = diagnose(fr, data.values, 12, 0.05);
            io::ReportDocument doc = io::make_report(fr, rep.tests, {{"columns", rc.columns}});
            std::cout << (s.mode == PowerMode::EstimatedDelta ? "estimated delta\n" : "known delta\n");
            std::cout << io::write_report(doc, io::ReportFormat::CsvTable);
        } catch (const Error& e) {
            std::cout << io::model_label(order) << ": " << e.what() << "\n";
        }
    }
    return 0;
}
