#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qnet/config.hpp"
#include "qnet/kernel.hpp"
#include "qnet/measures.hpp"
#include "qnet/simulator.hpp"
#include "qnet/solver.hpp"

namespace qnet {

/// In-memory results of one analytic solve.
struct SolveArtifacts {
    ArrivalDistribution<Real> arrival;
    std::vector<Real> time_avg;
    PerformanceReport<Real> report;
};

/// Full pipeline: utilization check, sigma and truncation level where they
/// apply, kernel, pre-arrival vector, time-average vector, measures.
inline SolveArtifacts solve_model(const Model<Real>& model, const Precision<Real>& ctx) {
    PrecisionGuard guard(ctx.digits);
    model.validate();
    SolveArtifacts art;
    if (model.has_batch()) {
        art.arrival = arrival_distribution_batch(model, ctx);
        art.time_avg = time_average_batch(model, art.arrival);
    } else {
        art.arrival = arrival_distribution_single(model, ctx);
        art.time_avg = time_average_single(model, art.arrival);
    }
    art.report = performance(model, art.time_avg, art.arrival);
    return art;
}

struct RunOptions {
    int round = 0;  // 0 = full working precision
    bool dump_matrix = false;
    std::filesystem::path outdir = ".";
};

struct RunOutcome {
    std::string stem;
    std::optional<Real> sigma;
    long level = 0;
    PerformanceReport<Real> report;
    std::vector<std::string> files;
    std::string summary;
};

namespace run_detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(p, std::ios::binary);  // binary: byte-identical across platforms
    if (!out) throw IoError("cannot write: " + p.string());
    return out;
}

inline std::string fmt(const Real& v, const Precision<Real>& ctx, int round) {
    return format_real(v, round > 0 ? round : ctx.digits);
}

inline const char* output_name(OutputKind k) {
    switch (k) {
        case OutputKind::stationary_table: return "stationary_table";
        case OutputKind::performance_report: return "performance_report";
        case OutputKind::pmf_data: return "pmf_data";
        case OutputKind::cdf_data: return "cdf_data";
        case OutputKind::transition_matrix_dump: return "transition_matrix_dump";
    }
    return "?";
}

inline std::vector<std::pair<std::string, std::string>> report_rows(
    const SolveArtifacts& art, const Model<Real>& model, const Precision<Real>& ctx, int round) {
    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("rho", fmt(model.utilization(), ctx, round));
    if (art.arrival.sigma) rows.emplace_back("sigma", fmt(*art.arrival.sigma, ctx, round));
    rows.emplace_back("N", std::to_string(art.arrival.level));
    rows.emplace_back("L", fmt(art.report.L, ctx, round));
    rows.emplace_back("Lq", fmt(art.report.Lq, ctx, round));
    rows.emplace_back("W", fmt(art.report.W, ctx, round));
    rows.emplace_back("Wq", fmt(art.report.Wq, ctx, round));
    rows.emplace_back("lambda_eff", fmt(art.report.lambda_eff, ctx, round));
    rows.emplace_back("blocking_time_avg", fmt(art.report.blocking_time_avg, ctx, round));
    rows.emplace_back("blocking_pre_arrival", fmt(art.report.blocking_pre_arrival, ctx, round));
    rows.emplace_back("W_alt", fmt(art.report.W_alt, ctx, round));
    rows.emplace_back("convention", art.report.convention);
    return rows;
}

/// Streams the embedded-chain matrix row by row (the full matrix at high
/// precision can be large). Batch kernels are materialized first.
inline void write_matrix_csv(std::ostream& out, const RunConfig& cfg, long level, int round) {
    const Model<Real>& m = cfg.model;
    const Precision<Real>& ctx = cfg.precision;
    auto put_row = [&](const std::vector<Real>& row) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            out << fmt(row[j], ctx, round);
        }
        out << '\n';
    };
    if (m.has_batch()) {
        Batch<Real> b = m.buffer == BufferMode::finite
                            ? detail::resolve_batch_support(*m.batch, level, ctx)
                            : *m.batch;
        auto base = single_arrival_rows(m, level, level + 1, ctx);
        auto P = batch_transform(base, level, b, m.buffer,
                                 m.buffer == BufferMode::finite ? m.rejection : Rejection::none);
        std::vector<Real> row(static_cast<std::size_t>(level) + 1);
        for (long i = 0; i <= level; ++i) {
            for (long j = 0; j <= level; ++j) row[static_cast<std::size_t>(j)] = P(i, j);
            put_row(row);
        }
        return;
    }
    KernelTables<Real> tables(m, level, ctx);
    std::vector<Real> last;
    for (long i = 0; i < level; ++i) {
        last = tables.row(i, level + 1);
        put_row(last);
    }
    put_row(last.empty() ? std::vector<Real>{Real(1)} : last);  // top row repeats
}

}  // namespace run_detail

/// Execute one configuration: solve, write the requested outputs under
/// options.outdir as <stem>.<output>.<csv|json>, and return the summary.
inline RunOutcome run(const RunConfig& cfg, const RunOptions& options = {}) {
    namespace rd = run_detail;
    PrecisionGuard guard(cfg.precision.digits);
    SolveArtifacts art = solve_model(cfg.model, cfg.precision);
    const Precision<Real>& ctx = cfg.precision;
    const int round = options.round;

    RunOutcome out;
    out.stem = cfg.stem;
    out.sigma = art.arrival.sigma;
    out.level = art.arrival.level;
    out.report = art.report;

    std::vector<OutputKind> outputs = cfg.outputs;
    if (options.dump_matrix &&
        std::find(outputs.begin(), outputs.end(), OutputKind::transition_matrix_dump) ==
            outputs.end())
        outputs.push_back(OutputKind::transition_matrix_dump);

    const bool is_json = cfg.format == FileFormat::json;
    const char* ext = is_json ? "json" : "csv";
    for (OutputKind kind : outputs) {
        std::filesystem::path p = options.outdir / (cfg.stem + "." + rd::output_name(kind) + "." + ext);
        auto f = rd::open_out(p);
        switch (kind) {
            case OutputKind::stationary_table: {
                if (is_json) {
                    nlohmann::json j;
                    j["version"] = 1;
                    j["output"] = "stationary_table";
                    for (long n = 0; n <= out.level; ++n) {
                        j["n"].push_back(n);
                        j["pi"].push_back(rd::fmt(art.arrival.pi[static_cast<std::size_t>(n)], ctx, round));
                        j["p"].push_back(rd::fmt(art.time_avg[static_cast<std::size_t>(n)], ctx, round));
                    }
                    f << j.dump(2) << '\n';
                } else {
                    f << "n,pi,p\n";
                    for (long n = 0; n <= out.level; ++n)
                        f << n << ',' << rd::fmt(art.arrival.pi[static_cast<std::size_t>(n)], ctx, round)
                          << ',' << rd::fmt(art.time_avg[static_cast<std::size_t>(n)], ctx, round) << '\n';
                }
                break;
            }
            case OutputKind::performance_report: {
                auto rows = rd::report_rows(art, cfg.model, ctx, round);
                if (is_json) {
                    nlohmann::json j;
                    j["version"] = 1;
                    j["output"] = "performance_report";
                    for (const auto& [k, v] : rows) j[k] = v;
                    f << j.dump(2) << '\n';
                } else {
                    f << "metric,value\n";
                    for (const auto& [k, v] : rows) f << k << ',' << v << '\n';
                }
                break;
            }
            case OutputKind::pmf_data:
            case OutputKind::cdf_data: {
                const bool cdf = kind == OutputKind::cdf_data;
                Real acc(0);
                if (is_json) {
                    nlohmann::json j;
                    j["version"] = 1;
                    j["output"] = rd::output_name(kind);
                    for (long n = 0; n <= out.level; ++n) {
                        acc += art.time_avg[static_cast<std::size_t>(n)];
                        j["n"].push_back(n);
                        j[cdf ? "cdf" : "pmf"].push_back(
                            rd::fmt(cdf ? acc : art.time_avg[static_cast<std::size_t>(n)], ctx, round));
                    }
                    f << j.dump(2) << '\n';
                } else {
                    f << (cdf ? "n,cdf\n" : "n,pmf\n");
                    for (long n = 0; n <= out.level; ++n) {
                        acc += art.time_avg[static_cast<std::size_t>(n)];
                        f << n << ','
                          << rd::fmt(cdf ? acc : art.time_avg[static_cast<std::size_t>(n)], ctx, round)
                          << '\n';
                    }
                }
                break;
            }
            case OutputKind::transition_matrix_dump: {
                if (is_json) {
                    std::ostringstream csv;
                    rd::write_matrix_csv(csv, cfg, out.level, round);
                    nlohmann::json j;
                    j["version"] = 1;
                    j["output"] = "transition_matrix_dump";
                    std::istringstream lines(csv.str());
                    std::string line;
                    while (std::getline(lines, line)) {
                        nlohmann::json row = nlohmann::json::array();
                        std::istringstream cells(line);
                        std::string cell;
                        while (std::getline(cells, cell, ',')) row.push_back(cell);
                        j["rows"].push_back(row);
                    }
                    f << j.dump(2) << '\n';
                } else {
                    rd::write_matrix_csv(f, cfg, out.level, round);
                }
                break;
            }
        }
        out.files.push_back(p.string());
    }

    std::ostringstream summary;
    summary << cfg.stem << ": sigma="
            << (out.sigma ? rd::fmt(*out.sigma, ctx, round) : std::string("-"))
            << " N=" << out.level << " L=" << rd::fmt(out.report.L, ctx, round)
            << " W=" << rd::fmt(out.report.W, ctx, round)
            << " lambda_eff=" << rd::fmt(out.report.lambda_eff, ctx, round);
    out.summary = summary.str();
    return out;
}

/// Simulate per the config's `simulate` block (or explicit overrides) and
/// write <stem>.simulation.<ext> in the analytic table schema plus standard
/// errors and a source column.
inline SimulationResult run_simulation(const RunConfig& cfg, const SimSettings& sim,
                                       const RunOptions& options = {}) {
    PrecisionGuard guard(cfg.precision.digits);
    SimulationResult res = simulate(cfg.model, sim.arrivals, sim.seed, sim.batches);
    const bool is_json = cfg.format == FileFormat::json;
    std::filesystem::path p =
        options.outdir / (cfg.stem + std::string(".simulation.") + (is_json ? "json" : "csv"));
    auto f = run_detail::open_out(p);
    auto d2s = [](double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    };
    if (is_json) {
        nlohmann::json j;
        j["version"] = 1;
        j["output"] = "simulation";
        j["arrivals"] = res.arrivals;
        j["seed"] = res.seed;
        j["accepted_fraction"] = d2s(res.accepted_fraction);
        for (std::size_t n = 0; n < res.pre_arrival.size(); ++n) {
            j["n"].push_back(n);
            j["pi"].push_back(d2s(res.pre_arrival[n]));
            j["p"].push_back(d2s(res.time_avg[n]));
            j["se_pi"].push_back(d2s(res.se_pre[n]));
            j["se_p"].push_back(d2s(res.se_time[n]));
        }
        j["source"] = "simulated";
        f << j.dump(2) << '\n';
    } else {
        f << "n,pi,p,se_pi,se_p,source\n";
        for (std::size_t n = 0; n < res.pre_arrival.size(); ++n)
            f << n << ',' << d2s(res.pre_arrival[n]) << ',' << d2s(res.time_avg[n]) << ','
              << d2s(res.se_pre[n]) << ',' << d2s(res.se_time[n]) << ",simulated\n";
    }
    return res;
}

struct ComparisonOutcome {
    double max_pi_se_units = 0;
    double max_p_se_units = 0;
    long worst_pi_state = -1;
    long worst_p_state = -1;
};

/// Max |analytic - simulated| in standard-error units across states, for both
/// the pre-arrival and time-average distributions. States whose SE vanished
/// are skipped unless the disagreement itself is material.
inline ComparisonOutcome compare_analytic_simulated(const SolveArtifacts& art,
                                                    const SimulationResult& sim) {
    ComparisonOutcome out;
    const std::size_t n_states = std::max(art.time_avg.size(), sim.time_avg.size());
    auto at = [](const std::vector<Real>& v, std::size_t i) {
        return i < v.size() ? static_cast<double>(v[i]) : 0.0;
    };
    auto atd = [](const std::vector<double>& v, std::size_t i) {
        return i < v.size() ? v[i] : 0.0;
    };
    for (std::size_t n = 0; n < n_states; ++n) {
        const double dpi = std::abs(at(art.arrival.pi, n) - atd(sim.pre_arrival, n));
        const double dp = std::abs(at(art.time_avg, n) - atd(sim.time_avg, n));
        const double se_pi = atd(sim.se_pre, n);
        const double se_p = atd(sim.se_time, n);
        if (se_pi > 0 || dpi > 1e-9) {
            const double units = se_pi > 0 ? dpi / se_pi : (dpi > 1e-9 ? 1e18 : 0.0);
            if (units > out.max_pi_se_units) {
                out.max_pi_se_units = units;
                out.worst_pi_state = static_cast<long>(n);
            }
        }
        if (se_p > 0 || dp > 1e-9) {
            const double units = se_p > 0 ? dp / se_p : (dp > 1e-9 ? 1e18 : 0.0);
            if (units > out.max_p_se_units) {
                out.max_p_se_units = units;
                out.worst_p_state = static_cast<long>(n);
            }
        }
    }
    return out;
}

}  // namespace qnet
