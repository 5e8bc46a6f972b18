#include "spineforge/json_io.hpp"

#include <cstdio>
#include <fstream>

namespace spineforge::io {

json spine_to_json(const spine::Spine& s) {
    json j;
    j["kind"] = kind_name(s.kind);
    j["d"] = s.d;
    j["k"] = s.k;
    j["relator"] = s.L.word().str();
    j["copies"] = s.L.components();
    json classes = json::array();
    for (const auto& cls : s.partition.classes) classes.push_back(cls);
    j["partition"] = std::move(classes);
    json fibers = json::array();
    for (const auto& f : s.fibers) {
        json fj;
        fj["strands"] = f.strands;
        if (!f.antipode.empty()) fj["antipode"] = f.antipode;
        fibers.push_back(std::move(fj));
    }
    j["fibers"] = std::move(fibers);
    return j;
}

spine::Spine spine_from_json(const json& j) {
    auto kind = kind_from_name(j.at("kind").get<std::string>());
    int d = j.at("d").get<int>();
    int k = j.at("k").get<int>();
    auto word = words::ReducedWord::parse(j.at("relator").get<std::string>(), true);
    int64_t copies = j.at("copies").get<int64_t>();
    rosegraph::EdgePartition p;
    for (const auto& cls : j.at("partition"))
        p.classes.push_back(cls.get<std::vector<int64_t>>());
    auto s = spine::make_spine(kind, d, k, rosegraph::circles_from_word(word, copies), p);
    // Stored fibers are integrity data: a mismatch with the derived fibers
    // must surface through the checker, so splice them in verbatim.
    if (j.contains("fibers")) {
        const auto& fj = j.at("fibers");
        if (static_cast<int64_t>(fj.size()) != s.sigma_edges())
            throw Error("fiber table size does not match the quotient");
        for (size_t e = 0; e < fj.size(); ++e) {
            s.fibers[e].strands = fj[e].at("strands").get<std::vector<int64_t>>();
            s.fibers[e].labels.resize(s.fibers[e].strands.size());
            for (size_t i = 0; i < s.fibers[e].labels.size(); ++i)
                s.fibers[e].labels[i] = static_cast<int>(i) + 1;
            if (fj[e].contains("antipode"))
                s.fibers[e].antipode = fj[e].at("antipode").get<std::vector<int>>();
        }
    }
    return s;
}

json report_to_json(const spine::SpineReport& r) {
    auto cond = [](const spine::ConditionReport& c) {
        json cj;
        cj["pass"] = c.pass;
        cj["witnesses"] = c.witnesses;
        return cj;
    };
    json j;
    j["r1"] = cond(r.r1);
    j["r2"] = cond(r.r2);
    j["r3"] = cond(r.r3);
    j["r4"] = cond(r.r4);
    j["r5"] = cond(r.r5);
    j["per_component_m"] = r.per_component_m;
    j["m"] = r.m;
    j["min_top_edge"] = r.min_top_edge;
    j["holonomies"] = r.holonomies;
    return j;
}

json graph_to_json(const rosegraph::LabeledGraph& g,
                   const rosegraph::EdgePartition* partition) {
    json j;
    j["vertices"] = g.num_vertices;
    json edges = json::array();
    for (const auto& e : g.edges) {
        json ej;
        ej["u"] = e.u;
        ej["v"] = e.v;
        ej["label"] = std::string(1, words::letter_to_char(e.label));
        edges.push_back(std::move(ej));
    }
    j["edges"] = std::move(edges);
    if (partition) {
        json classes = json::array();
        for (const auto& cls : partition->classes) classes.push_back(cls);
        j["partition"] = std::move(classes);
    }
    return j;
}

rosegraph::LabeledGraph graph_from_json(const json& j) {
    rosegraph::LabeledGraph g;
    g.num_vertices = j.at("vertices").get<int64_t>();
    for (const auto& ej : j.at("edges")) {
        auto label = ej.at("label").get<std::string>();
        if (label.size() != 1) throw Error("edge label must be one character");
        g.edges.push_back({ej.at("u").get<int64_t>(), ej.at("v").get<int64_t>(),
                           words::letter_from_char(label[0])});
    }
    return g;
}

std::string spine_dot(const spine::Spine& s) {
    std::string out = "graph spine {\n  node [shape=point];\n";
    const auto& g = s.quotient.graph;
    int dd = s.dd();
    for (int64_t e = 0; e < g.num_edges(); ++e) {
        bool glued = static_cast<int>(s.fibers[e].strands.size()) == dd;
        out += "  v" + std::to_string(g.edges[e].u) + " -- v" +
               std::to_string(g.edges[e].v) + " [label=\"" +
               words::letter_to_char(g.edges[e].label) + "\", color=" +
               (glued ? "red" : "black") + "];\n";
    }
    out += "}\n";
    return out;
}

std::string graph_dot(const rosegraph::LabeledGraph& g) {
    std::string out = "graph g {\n  node [shape=point];\n";
    for (const auto& e : g.edges) {
        out += "  v" + std::to_string(e.u) + " -- v" + std::to_string(e.v) +
               " [label=\"" + words::letter_to_char(e.label) + "\"];\n";
    }
    out += "}\n";
    return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + tmp + " for writing");
        f << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("cannot rename " + tmp + " to " + path);
}

}  // namespace spineforge::io
