#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spineforge/analysis.hpp"
#include "spineforge/coxeter.hpp"
#include "spineforge/json_io.hpp"
#include "spineforge/pipeline.hpp"

using namespace spineforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitVerify = 4;

int threads_cap() {
    // Single process, internal parallelism bounded by this cap (the current
    // implementation runs deterministically on one thread).
    if (const char* env = std::getenv("SPINEFORGE_THREADS")) {
        int v = std::atoi(env);
        return v > 0 ? v : 1;
    }
    return 1;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct BuildCli {
    std::string kind = "simplicial";
    int d = 2;
    int k = 3;
    int64_t n = 0;
    int64_t lambda = 0;
    int64_t bigN = 0;
    int64_t copies = 0;
    int64_t groups = 2;
    uint64_t seed = 1;
    int64_t retry_budget = 256;
    std::string out = ".";
    std::vector<std::string> formats{"json"};
    std::string relator_mode = "buildable";
    std::string relator;
};

int run_build(const BuildCli& cli) {
    pipeline::BuildParams p;
    p.kind = kind_from_name(cli.kind);
    p.d = cli.d;
    p.k = cli.k;
    p.lambda = cli.lambda;
    p.bigN = cli.bigN;
    p.copies = cli.copies;
    p.groups = cli.groups;
    p.seed = cli.seed;
    p.retry_budget = cli.retry_budget;
    p.validate();
    if (cli.n != 0 && cli.n != p.n())
        throw Error("n = " + std::to_string(cli.n) +
                        " is not the groups*dd*Lambda*N multiple " +
                        std::to_string(p.n()) +
                        " (adjust --groups/--lambda/--bigN)",
                    "config");

    words::ReducedWord r;
    if (!cli.relator.empty()) {
        r = words::ReducedWord::parse(cli.relator, true);
    } else if (cli.relator_mode == "buildable") {
        r = pipeline::sample_buildable_relator(p);
    } else if (cli.relator_mode == "uniform") {
        r = words::random_cyclically_reduced_word(p.k, p.n(), p.seed);
    } else {
        throw Error("unknown relator mode '" + cli.relator_mode + "'", "config");
    }

    auto res = pipeline::build_spine(r, p);

    std::string dir = cli.out;
    if (!dir.empty() && dir.back() != '/') dir += '/';
    for (const auto& fmt : cli.formats) {
        if (fmt == "json") {
            io::write_file_atomic(dir + "spine.json", io::spine_to_json(res.spine).dump(2) + "\n");
            io::write_file_atomic(dir + "report.json",
                                  io::report_to_json(res.report).dump(2) + "\n");
            std::string trace;
            for (const auto& line : res.trace)
                trace += io::json{{"event", line}}.dump() + "\n";
            io::write_file_atomic(dir + "trace.jsonl", trace);
        } else if (fmt == "dot") {
            io::write_file_atomic(dir + "spine.dot", io::spine_dot(res.spine));
        } else {
            throw Error("unknown format '" + fmt + "'", "config");
        }
    }
    std::cout << "built: R1-R5 "
              << (res.report.regular() ? "pass" : "fail") << ", m = " << res.report.m
              << ", min topological edge = " << res.report.min_top_edge << "\n";
    return res.report.regular() ? kExitOk : kExitStage;
}

int run_verify(const std::string& path) {
    io::json j;
    try {
        j = io::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitVerify;
    }
    auto s = io::spine_from_json(j);
    auto report = spine::check_regularity(s);
    std::cout << io::report_to_json(report).dump(2) << "\n";
    // Compare against a stored report when present next to the spine.
    std::string report_path = path;
    auto slash = report_path.find_last_of('/');
    report_path = (slash == std::string::npos ? "" : report_path.substr(0, slash + 1)) +
                  "report.json";
    std::ifstream rf(report_path);
    if (rf) {
        io::json stored = io::json::parse(read_file(report_path));
        io::json fresh = io::report_to_json(report);
        for (const char* key : {"r1", "r2", "r3", "r4", "r5"}) {
            if (stored.at(key).at("pass") != fresh.at(key).at("pass")) {
                std::cerr << "verification mismatch on " << key << "\n";
                return kExitVerify;
            }
        }
    }
    return report.regular() ? kExitOk : kExitStage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spine construction and verification for relator quotient graphs"};
    app.require_subcommand(1);
    (void)threads_cap();

    BuildCli bc;
    auto* build = app.add_subcommand("build", "build a spine and write artifacts");
    build->add_option("--kind", bc.kind, "simplicial or cubical")->required();
    build->add_option("--d", bc.d, "dimension")->required();
    build->add_option("--k", bc.k, "free rank");
    build->add_option("--n", bc.n, "relator length (must match the derived multiple)");
    build->add_option("--lambda", bc.lambda, "segment scale (default 4*dd)");
    build->add_option("--bigN", bc.bigN, "segments per block (default 8*lambda)");
    build->add_option("--copies", bc.copies, "circle copies (default kind-derived)");
    build->add_option("--groups", bc.groups, "matching groups (even, >= 2)");
    build->add_option("--seed", bc.seed, "build seed");
    build->add_option("--retry-budget", bc.retry_budget, "bounded search budget");
    build->add_option("--out", bc.out, "output directory");
    build->add_option("--format", bc.formats, "json and/or dot")->delimiter(',');
    build->add_option("--relator-mode", bc.relator_mode,
                      "buildable (structured, matchable) or uniform");
    build->add_option("--relator", bc.relator, "explicit relator word (a..z/A..Z)");

    std::string verify_path;
    auto* verify = app.add_subcommand("verify", "re-check a stored spine.json");
    verify->add_option("file", verify_path, "spine.json path")->required();

    int m_min = 3, m_max = 8, d_min = 2, d_max = 6;
    std::string classify_out;
    auto* classify = app.add_subcommand("classify", "Gram classification table (CSV)");
    classify->add_option("--m-min", m_min);
    classify->add_option("--m-max", m_max);
    classify->add_option("--d-min", d_min);
    classify->add_option("--d-max", d_max);
    classify->add_option("--out", classify_out, "CSV output path (default stdout)");

    auto* analyze = app.add_subcommand("analyze", "small-cancellation analyses");
    analyze->require_subcommand(1);
    int ak = 2;
    int64_t an = 4096;
    uint64_t aseed = 1;
    double adensity = 0.0;
    auto* pieces = analyze->add_subcommand("pieces", "max piece length / n");
    pieces->add_option("--k", ak);
    pieces->add_option("--n", an);
    pieces->add_option("--seed", aseed);
    pieces->add_option("--density", adensity, "presentation density (0: one relator)");
    double adelta = 0.3, aC = 0.0;
    int add_ = 2;
    auto* beads = analyze->add_subcommand("beads", "bead decomposition and lips");
    beads->add_option("--k", ak);
    beads->add_option("--n", an);
    beads->add_option("--seed", aseed);
    beads->add_option("--delta", adelta);
    beads->add_option("--C", aC, "lip constant (default 0.2*delta/log(2k-1))");
    beads->add_option("--dd", add_, "gluing multiplicity");
    std::string lift_spine;
    double abeta = 0.1;
    auto* lift = analyze->add_subcommand("lift", "long-subword lift check");
    lift->add_option("--spine", lift_spine, "spine.json path")->required();
    lift->add_option("--beta", abeta);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) return run_build(bc);
        if (*verify) return run_verify(verify_path);
        if (*classify) {
            auto csv = coxeter::classification_csv(m_min, m_max, d_min, d_max);
            if (classify_out.empty())
                std::cout << csv;
            else
                io::write_file_atomic(classify_out, csv);
            return kExitOk;
        }
        if (*pieces) {
            words::Presentation p;
            if (adensity > 0) {
                p = words::sample_presentation(ak, an, adensity, aseed);
            } else {
                p.k = ak;
                p.relators.push_back(words::random_cyclically_reduced_word(ak, an, aseed));
            }
            auto st = analysis::pieces_ratio(p);
            std::cout << "max_piece=" << st.max_piece << " ratio=" << st.ratio << "\n";
            return kExitOk;
        }
        if (*beads) {
            double C = aC > 0 ? aC : 0.2 * adelta / std::log(2.0 * ak - 1.0);
            auto r = words::random_cyclically_reduced_word(ak, an, aseed);
            auto bd = analysis::bead_decompose(r, adelta, C, add_, ak, aseed);
            std::cout << "m=" << bd.m << " lip_len=" << bd.lip_len
                      << " lips=" << bd.lips.size()
                      << " gluable=" << (bd.lips_gluable ? "yes" : "no") << "\n";
            return kExitOk;
        }
        if (*lift) {
            auto s = io::spine_from_json(io::json::parse(read_file(lift_spine)));
            auto res = analysis::long_subword_lift_check(s, abeta);
            using V = analysis::LiftCheckResult::Verdict;
            std::cout << (res.verdict == V::lifts
                              ? "lifts"
                              : res.verdict == V::counterexample ? "counterexample"
                                                                 : "inconclusive")
                      << " paths=" << res.paths_checked << "\n";
            return res.verdict == V::lifts ? kExitOk : kExitStage;
        }
    } catch (const Error& e) {
        std::cerr << (e.stage().empty() ? "error" : e.stage()) << ": " << e.what()
                  << "\n";
        return e.stage() == "config" ? kExitConfig : kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
    return kExitConfig;
}
