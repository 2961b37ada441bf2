#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "eplab/eplab.h"

namespace {

std::filesystem::path scratch() {
    auto p = std::filesystem::temp_directory_path() / "eplab_capi_test";
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("status names and last error") {
    CHECK(std::string(eplab_status_name(EPLAB_OK)) == "ok");
    CHECK(std::string(eplab_status_name(EPLAB_BUFFER_TOO_SMALL)) == "buffer_too_small");
    CHECK(std::string(eplab_status_name(static_cast<eplab_status>(42))) == "unknown");

    eplab_init* init = nullptr;
    CHECK(eplab_init_preset("sawtooth", 0.1, 1.0, 0.0, 1.0, &init) == EPLAB_INVALID_ARGUMENT);
    CHECK(init == nullptr);
    CHECK(std::strlen(eplab_last_error()) > 0);
    CHECK(eplab_init_preset(nullptr, 0.1, 1.0, 0.0, 1.0, &init) == EPLAB_INVALID_ARGUMENT);
    REQUIRE(eplab_init_preset("laser", 0.1, 1.0, 0.0, 1.0, &init) == EPLAB_OK);
    CHECK(std::strlen(eplab_last_error()) == 0);
    eplab_init_free(init);
    eplab_init_free(nullptr);
}

TEST_CASE("initial data and criterion") {
    eplab_init* init = nullptr;
    REQUIRE(eplab_init_preset("laser", 0.7283, 1.0, 0.0, 1.0, &init) == EPLAB_OK);
    double v[5];
    REQUIRE(eplab_init_eval(init, 0.0, v) == EPLAB_OK);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == 0.0);
    CHECK(v[3] == doctest::Approx(-2.0 * 0.7283));

    double lhs = 0.0, rhs = 0.0;
    REQUIRE(eplab_criterion_point(0.0, 0.0, 0.0, 0.0, 2.0, &lhs, &rhs) == EPLAB_OK);
    CHECK(lhs == -1.0);
    CHECK(rhs == 0.0);

    int blowup = 0;
    double margin = 0.0, where = 0.0;
    REQUIRE(eplab_criterion_table(init, -10.0, 10.0, 4000, 0.0, 2.0, nullptr, &blowup, &margin, &where) == EPLAB_OK);
    CHECK(blowup == 1);
    CHECK(margin == doctest::Approx(0.3).epsilon(1e-3));
    eplab_init_free(init);

    double a_c = 0.0;
    REQUIRE(eplab_critical_amplitude(0.0, 2.0, 0.1, 1.0, &a_c) == EPLAB_OK);
    CHECK(a_c == doctest::Approx(0.56021).epsilon(1e-4));
    CHECK(eplab_critical_amplitude(0.0, 2.0, 0.1, 0.2, &a_c) == EPLAB_BRACKET_FAILURE);
}

TEST_CASE("table initial data") {
    std::vector<double> x, V, E;
    for (int i = 0; i <= 200; ++i) {
        x.push_back(-10.0 + 0.1 * i);
        V.push_back(0.0);
        E.push_back(0.1 * std::exp(-x.back() * x.back()));
    }
    eplab_init* init = nullptr;
    REQUIRE(eplab_init_table(x.data(), V.data(), E.data(), x.size(), &init) == EPLAB_OK);
    double v[5];
    REQUIRE(eplab_init_eval(init, 0.0, v) == EPLAB_OK);
    CHECK(v[1] == doctest::Approx(0.1));
    eplab_init_free(init);
    CHECK(eplab_init_table(x.data(), V.data(), E.data(), 2, &init) == EPLAB_INVALID_ARGUMENT);
}

TEST_CASE("equilibria buffer handling") {
    size_t count = 0;
    CHECK(eplab_equilibria(3.0, nullptr, 0, &count) == EPLAB_BUFFER_TOO_SMALL);
    CHECK(count == 3);
    std::vector<eplab_equilibrium> eq(count);
    REQUIRE(eplab_equilibria(3.0, eq.data(), eq.size(), &count) == EPLAB_OK);
    for (const auto& q : eq) CHECK(std::strlen(q.kind) > 0);
    CHECK(eplab_equilibria(-1.0, eq.data(), eq.size(), &count) == EPLAB_INVALID_ARGUMENT);
}

TEST_CASE("separatrix count query") {
    eplab_separatrix_options o;
    eplab_separatrix_defaults(&o);
    o.rays = 16;
    size_t count = 0;
    CHECK(eplab_separatrix(1.0, &o, nullptr, nullptr, 0, &count) == EPLAB_BUFFER_TOO_SMALL);
    REQUIRE(count > 0);
    std::vector<double> e(count), v(count);
    CHECK(eplab_separatrix(1.0, &o, e.data(), v.data(), count, &count) == EPLAB_OK);

    int smooth = -1;
    REQUIRE(eplab_membership(0.0, 0.0, 0.0, 50.0, &smooth) == EPLAB_OK);
    CHECK(smooth == 1);
    REQUIRE(eplab_membership(0.0, -1.0, 0.5, 50.0, &smooth) == EPLAB_OK);
    CHECK(smooth == 0);
}

TEST_CASE("single characteristic") {
    eplab_integrator_options o;
    eplab_integrator_defaults(&o);
    const double state[5] = {0.0, 0.0, 0.1, 0.0, 0.1};
    eplab_trajectory_summary s;
    REQUIRE(eplab_characteristic(0.0, state, 2.0 * M_PI, &o, nullptr, &s) == EPLAB_OK);
    CHECK(s.blew_up == 0);
    CHECK(std::isnan(s.t_star));
    CHECK(s.E == doctest::Approx(0.1).epsilon(1e-6));
    const double doomed[5] = {0.0, 0.0, 0.0, -2.0, 0.0};
    REQUIRE(eplab_characteristic(0.0, doomed, 10.0, &o, nullptr, &s) == EPLAB_OK);
    CHECK(s.blew_up == 1);
    CHECK(s.t_star < 1.0);
}

TEST_CASE("solver handles") {
    eplab_init* init = nullptr;
    REQUIRE(eplab_init_preset("laser", 0.05, 1.0, 0.0, 1.0, &init) == EPLAB_OK);
    eplab_solver_config cfg;
    eplab_solver_defaults(&cfg);
    cfg.n_cells = 256;
    cfg.t_end = 2.0 * M_PI;
    cfg.advection = 1;
    eplab_run* run = nullptr;
    REQUIRE(eplab_solve(init, &cfg, &run) == EPLAB_OK);
    eplab_run_summary sum;
    REQUIRE(eplab_run_get_summary(run, &sum) == EPLAB_OK);
    CHECK(sum.blew_up == 0);
    CHECK(sum.t_final == doctest::Approx(2.0 * M_PI));
    REQUIRE(sum.snapshots >= 2);

    std::vector<double> V(256), E(256);
    double t = -1.0;
    CHECK(eplab_run_snapshot(run, 0, &t, V.data(), E.data(), 10) == EPLAB_BUFFER_TOO_SMALL);
    REQUIRE(eplab_run_snapshot(run, 0, &t, V.data(), E.data(), V.size()) == EPLAB_OK);
    CHECK(t == 0.0);
    CHECK(eplab_run_snapshot(run, sum.snapshots, &t, V.data(), E.data(), V.size()) == EPLAB_INVALID_ARGUMENT);

    double defect = 0.0, budget = 0.0;
    REQUIRE(eplab_run_periodicity(run, &defect, &budget) == EPLAB_OK);
    CHECK(defect < budget);
    double res = 0.0;
    CHECK(eplab_run_cole_hopf(run, 0.1, 0.0, nullptr, &res) == EPLAB_PRECONDITION);

    const auto dir = scratch();
    REQUIRE(eplab_run_write(run, dir.c_str(), "capi", 1) == EPLAB_OK);
    CHECK(std::filesystem::exists(dir / "capi.json"));
    eplab_run_free(run);

    cfg.cfl = 2.0;
    run = nullptr;
    CHECK(eplab_solve(init, &cfg, &run) == EPLAB_INVALID_ARGUMENT);
    CHECK(run == nullptr);
    eplab_init_free(init);
}

TEST_CASE("ensemble handles") {
    eplab_init* init = nullptr;
    REQUIRE(eplab_init_preset("laser", 0.3, 1.0, 0.0, 1.0, &init) == EPLAB_OK);
    eplab_ensemble* ens = nullptr;
    CHECK(eplab_ensemble_create(init, "uniform", -6.0, 6.0, 2000, 0.0, 1, 1, &ens) == EPLAB_INVALID_ARGUMENT);
    CHECK(eplab_ensemble_create(init, "cauchy", -6.0, 6.0, 2000, 0.1, 1, 1, &ens) == EPLAB_INVALID_ARGUMENT);
    REQUIRE(eplab_ensemble_create(init, "uniform", -6.0, 6.0, 2000, 0.1, 5, 1, &ens) == EPLAB_OK);
    REQUIRE(eplab_ensemble_advance(ens, 0.5, 0.01, 1) == EPLAB_OK);

    const auto path = (scratch() / "capi.bin").string();
    REQUIRE(eplab_ensemble_save(ens, path.c_str()) == EPLAB_OK);
    eplab_ensemble* back = nullptr;
    REQUIRE(eplab_ensemble_load(path.c_str(), &back) == EPLAB_OK);
    size_t n = 0;
    double t = 0.0, sigma = 0.0;
    uint64_t seed = 0;
    REQUIRE(eplab_ensemble_info(back, &n, &t, &sigma, &seed) == EPLAB_OK);
    CHECK(n == 2000);
    CHECK(t == doctest::Approx(0.5));
    CHECK(sigma == 0.1);
    CHECK(seed == 5);

    double mass = 0.0, max_rho = 0.0;
    REQUIRE(eplab_ensemble_moments(back, -10.0, 10.0, 256, 0.0, 1, nullptr, 0, &mass, &max_rho) == EPLAB_OK);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(eplab_ensemble_moments(back, 100.0, 110.0, 64, 0.0, 1, nullptr, 0, &mass, &max_rho) ==
          EPLAB_EMPTY_ESTIMATE);
    CHECK(eplab_ensemble_load((scratch() / "missing.bin").c_str(), &back) == EPLAB_IO);

    eplab_ensemble_free(back);
    eplab_ensemble_free(ens);
    eplab_init_free(init);
}
