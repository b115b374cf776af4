#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "qnet/model.hpp"
#include "qnet/real.hpp"

namespace qnet {

enum class OutputKind {
    stationary_table,
    performance_report,
    pmf_data,
    cdf_data,
    transition_matrix_dump,
};

enum class FileFormat { csv, json };

struct SimSettings {
    std::uint64_t arrivals = 0;
    std::uint64_t seed = 1;
    int batches = 32;
};

struct RunConfig {
    Model<Real> model;
    Precision<Real> precision;
    std::vector<OutputKind> outputs;
    FileFormat format = FileFormat::csv;
    std::optional<SimSettings> simulate;
    std::string stem;
};

namespace cfg_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& field, const std::string& what) {
    throw ValidationError(field + ": " + what);
}

inline const json& member(const json& j, const std::string& field, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) fail(field + "." + key, "missing required field");
    return *it;
}

/// Decimal fields accept JSON numbers or strings. Strings carry arbitrary
/// precision; numbers round-trip through their shortest representation, which
/// recovers human-written literals of up to ~15 significant digits exactly.
inline Real decimal(const json& j, const std::string& field, int digits) {
    if (j.is_string()) return parse_decimal(j.get<std::string>(), digits);
    if (j.is_number()) return parse_decimal(j.dump(), digits);
    fail(field, "expected a decimal number or string");
}

inline long integer(const json& j, const std::string& field) {
    if (!j.is_number_integer()) fail(field, "expected an integer");
    return j.get<long>();
}

inline Interarrival<Real> parse_interarrival(const json& j, int digits) {
    const std::string field = "model.interarrival";
    if (!j.is_object()) fail(field, "expected an object");
    const std::string law = member(j, field, "law").get<std::string>();
    if (law == "deterministic") {
        if (j.contains("a")) return Interarrival<Real>::deterministic(decimal(j["a"], field + ".a", digits));
        if (j.contains("rate"))
            return Interarrival<Real>::deterministic(Real(1) / decimal(j["rate"], field + ".rate", digits));
        fail(field, "deterministic law needs 'a' or 'rate'");
    }
    if (law == "exponential")
        return Interarrival<Real>::exponential(decimal(member(j, field, "rate"), field + ".rate", digits));
    if (law == "erlang")
        return Interarrival<Real>::erlang(
            static_cast<int>(integer(member(j, field, "phases"), field + ".phases")),
            decimal(member(j, field, "rate"), field + ".rate", digits));
    if (law == "hyperexponential") {
        const json& jw = member(j, field, "weights");
        const json& jr = member(j, field, "rates");
        if (!jw.is_array() || !jr.is_array()) fail(field, "weights/rates must be arrays");
        std::vector<Real> w, r;
        for (const auto& v : jw) w.push_back(decimal(v, field + ".weights", digits));
        for (const auto& v : jr) r.push_back(decimal(v, field + ".rates", digits));
        return Interarrival<Real>::hyperexponential(std::move(w), std::move(r));
    }
    if (law == "phase-type") {
        const json& ja = member(j, field, "alpha");
        const json& jt = member(j, field, "subgenerator");
        if (!ja.is_array() || !jt.is_array()) fail(field, "alpha/subgenerator must be arrays");
        std::vector<Real> alpha;
        for (const auto& v : ja) alpha.push_back(decimal(v, field + ".alpha", digits));
        Dense<Real> T(ja.size(), ja.size());
        if (jt.size() != ja.size()) fail(field + ".subgenerator", "must be square, matching alpha");
        for (std::size_t i = 0; i < jt.size(); ++i) {
            if (!jt[i].is_array() || jt[i].size() != ja.size())
                fail(field + ".subgenerator", "must be square, matching alpha");
            for (std::size_t k = 0; k < jt[i].size(); ++k)
                T(i, k) = decimal(jt[i][k], field + ".subgenerator", digits);
        }
        return Interarrival<Real>::phase_type(std::move(alpha), std::move(T));
    }
    fail(field + ".law", "unknown law '" + law +
                             "' (expected deterministic, exponential, erlang, hyperexponential, "
                             "phase-type)");
}

inline Batch<Real> parse_batch(const json& j, long capacity, const Precision<Real>& ctx) {
    const std::string field = "model.batch";
    if (!j.is_object()) fail(field, "expected an object");
    const std::string law = member(j, field, "law").get<std::string>();
    const long min_support = std::max<long>(capacity + 1, 8);
    if (law == "geometric")
        return Batch<Real>::geometric(decimal(member(j, field, "ratio"), field + ".ratio", ctx.digits),
                                      min_support, ctx.eps_trunc);
    if (law == "poisson")
        return Batch<Real>::poisson(decimal(member(j, field, "mean"), field + ".mean", ctx.digits),
                                    min_support, ctx.eps_trunc);
    if (law == "pmf") {
        const json& jp = member(j, field, "pmf");
        if (!jp.is_array() || jp.empty()) fail(field + ".pmf", "expected a nonempty array");
        std::vector<Real> pmf;
        for (const auto& v : jp) pmf.push_back(decimal(v, field + ".pmf", ctx.digits));
        Real tail(0);
        if (j.contains("tail_mass")) tail = decimal(j["tail_mass"], field + ".tail_mass", ctx.digits);
        return Batch<Real>::from_pmf(std::move(pmf), tail);
    }
    fail(field + ".law", "unknown batch law '" + law + "' (expected geometric, poisson, pmf)");
}

}  // namespace cfg_detail

/// Parse and validate a run configuration. QNET_PRECISION_DIGITS overrides
/// the configured digit count when set.
inline RunConfig parse_config_json(const nlohmann::json& root, const std::string& stem) {
    using cfg_detail::fail;
    using cfg_detail::member;
    using nlohmann::json;
    if (!root.is_object()) throw ParseError("config: top level must be an object");
    if (root.contains("version") && root["version"].is_number_integer() &&
        root["version"].get<long>() != 1)
        fail("version", "unsupported schema version");

    int digits = kSmallScaleDigits;
    std::string eps_sigma = "1e-40", eps_trunc = "1e-16";
    if (root.contains("precision")) {
        const json& p = root["precision"];
        if (!p.is_object()) fail("precision", "expected an object");
        if (p.contains("digits")) digits = static_cast<int>(cfg_detail::integer(p["digits"], "precision.digits"));
        auto literal = [&](const char* key, std::string& into) {
            if (!p.contains(key)) return;
            if (p[key].is_string())
                into = p[key].get<std::string>();
            else if (p[key].is_number())
                into = p[key].dump();
            else
                fail(std::string("precision.") + key, "expected a decimal number or string");
        };
        literal("eps_sigma", eps_sigma);
        literal("eps_trunc", eps_trunc);
    }
    if (const char* env = std::getenv("QNET_PRECISION_DIGITS")) {
        try {
            digits = std::stoi(env);
        } catch (const std::exception&) {
            throw ValidationError("QNET_PRECISION_DIGITS: not an integer");
        }
    }
    RunConfig out;
    out.stem = stem;
    out.precision = make_context(digits, eps_sigma, eps_trunc);
    PrecisionGuard guard(digits);

    const json& jm = member(root, "config", "model");
    if (!jm.is_object()) fail("model", "expected an object");
    Model<Real>& m = out.model;
    m.servers = static_cast<int>(cfg_detail::integer(member(jm, "model", "servers"), "model.servers"));
    m.service_rate = cfg_detail::decimal(member(jm, "model", "service_rate"), "model.service_rate", digits);
    m.interarrival = cfg_detail::parse_interarrival(member(jm, "model", "interarrival"), digits);

    const json& jb = member(jm, "model", "buffer");
    const std::string btype = member(jb, "model.buffer", "type").get<std::string>();
    if (btype == "finite") {
        m.buffer = BufferMode::finite;
        m.capacity = cfg_detail::integer(member(jb, "model.buffer", "capacity"), "model.buffer.capacity");
    } else if (btype == "infinite") {
        m.buffer = BufferMode::infinite;
    } else {
        fail("model.buffer.type", "expected 'finite' or 'infinite'");
    }

    if (jm.contains("batch"))
        m.batch = cfg_detail::parse_batch(jm["batch"], m.buffer == BufferMode::finite ? m.capacity : 0,
                                          out.precision);

    if (jm.contains("rejection")) {
        const std::string rej = jm["rejection"].get<std::string>();
        if (rej == "partial")
            m.rejection = Rejection::partial;
        else if (rej == "full")
            m.rejection = Rejection::full;
        else
            fail("model.rejection", "expected 'partial' or 'full'");
    }
    if (jm.contains("finite_method")) {
        const std::string fm = jm["finite_method"].get<std::string>();
        if (fm == "exact")
            m.finite_method = FiniteMethod::exact;
        else if (fm == "geometric-tail")
            m.finite_method = FiniteMethod::geometric_tail;
        else
            fail("model.finite_method", "expected 'exact' or 'geometric-tail'");
    }
    m.validate();

    if (root.contains("outputs")) {
        const json& jo = root["outputs"];
        if (!jo.is_array()) fail("outputs", "expected an array");
        for (const auto& v : jo) {
            const std::string name = v.get<std::string>();
            if (name == "stationary_table")
                out.outputs.push_back(OutputKind::stationary_table);
            else if (name == "performance_report")
                out.outputs.push_back(OutputKind::performance_report);
            else if (name == "pmf_data")
                out.outputs.push_back(OutputKind::pmf_data);
            else if (name == "cdf_data")
                out.outputs.push_back(OutputKind::cdf_data);
            else if (name == "transition_matrix_dump")
                out.outputs.push_back(OutputKind::transition_matrix_dump);
            else
                fail("outputs", "unknown output '" + name + "'");
        }
    } else {
        out.outputs = {OutputKind::stationary_table, OutputKind::performance_report};
    }

    if (root.contains("format")) {
        const std::string f = root["format"].get<std::string>();
        if (f == "csv")
            out.format = FileFormat::csv;
        else if (f == "json")
            out.format = FileFormat::json;
        else
            fail("format", "expected 'csv' or 'json'");
    }

    if (root.contains("simulate")) {
        const json& js = root["simulate"];
        SimSettings s;
        s.arrivals = static_cast<std::uint64_t>(
            cfg_detail::integer(member(js, "simulate", "arrivals"), "simulate.arrivals"));
        s.seed = static_cast<std::uint64_t>(
            cfg_detail::integer(member(js, "simulate", "seed"), "simulate.seed"));
        if (js.contains("batches"))
            s.batches = static_cast<int>(cfg_detail::integer(js["batches"], "simulate.batches"));
        out.simulate = s;
    }
    return out;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config " + path.string() + ": " + e.what());
    }
    return parse_config_json(root, path.stem().string());
}

}  // namespace qnet
