#include "kdmdp/dump.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace kdmdp {

using nlohmann::json;

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

constexpr const char* kValuesFormat = "kdmdp.values";
constexpr const char* kPoliciesFormat = "kdmdp.policies";

json fns_json(const PwlcSet& s) {
    json out = json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        json row = json::array();
        for (double c : s.coeffs(i)) row.push_back(c);
        row.push_back(s.offset(i));
        out.push_back(std::move(row));
    }
    return out;
}

PwlcSet fns_from_json(const json& j, int dims) {
    std::vector<LinearFn> fns;
    for (const auto& row : j) {
        auto v = row.get<std::vector<double>>();
        if (static_cast<int>(v.size()) != dims + 1) throw ParseError("linear function has the wrong number of entries");
        const double b = v.back();
        v.pop_back();
        fns.push_back({std::move(v), b});
    }
    return PwlcSet(dims, std::move(fns));
}

/// Preorder node list: splits are {"dim","cut"}, leaves carry their rect and
/// the payload fields written by `leaf_json`.
template <class P, class F>
json tree_json(const KdPartition<P>& p, F&& leaf_json) {
    json out = json::array();
    auto rec = [&](auto&& self, std::int32_t n) -> void {
        const KdNode& node = p.nodes()[static_cast<std::size_t>(n)];
        if (node.is_leaf()) {
            const auto& lf = p.leaf(static_cast<std::size_t>(node.leaf));
            json j = leaf_json(lf.payload);
            j["low"] = std::vector<double>(lf.rect.lows().begin(), lf.rect.lows().end());
            j["high"] = std::vector<double>(lf.rect.highs().begin(), lf.rect.highs().end());
            out.push_back(std::move(j));
            return;
        }
        out.push_back({{"dim", node.dim}, {"cut", node.cut}});
        self(self, node.left);
        self(self, node.right);
    };
    rec(rec, 0);
    return out;
}

template <class P, class F>
KdPartition<P> tree_from_json(const json& nodes, int dims, F&& leaf_from_json) {
    if (!nodes.is_array() || nodes.empty()) throw ParseError("partition: expected a nonempty node list");
    KdBuilder<P> b(Rect::unit(dims));
    std::size_t pos = 0;
    auto rec = [&](auto&& self, std::int32_t id, const Rect& r) -> void {
        if (pos >= nodes.size()) throw ParseError("partition: truncated node list");
        const json& j = nodes[pos++];
        if (j.contains("dim")) {
            const int dim = j.at("dim").get<int>();
            const double cut = j.at("cut").get<double>();
            if (dim < 0 || dim >= dims || !(cut > r.low(dim) && cut < r.high(dim))) throw ParseError("partition: invalid split");
            auto [l, rr] = b.make_split(id, dim, cut);
            self(self, l, r.below(dim, cut));
            self(self, rr, r.above(dim, cut));
        } else {
            b.make_leaf(id, r, leaf_from_json(j));
        }
    };
    const auto root = b.reserve();
    rec(rec, root, Rect::unit(dims));
    if (pos != nodes.size()) throw ParseError("partition: trailing nodes");
    return std::move(b).finish();
}

json parse_doc(std::string_view text, const char* format) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("dump: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != format) throw ParseError(std::string("dump: expected format '") + format + "'");
    return doc;
}

} // namespace

std::string dump_values(const std::vector<ValueFunction>& values, const HybridMdp& m) {
    json doc{{"format", kValuesFormat}, {"dims", m.dims}, {"states", m.discrete_states}};
    json stages = json::array();
    for (const auto& v : values) {
        json parts = json::array();
        for (const auto& p : v.states) parts.push_back(tree_json(p, [](const PwlcSet& s) { return json{{"fns", fns_json(s)}}; }));
        stages.push_back({{"stage", v.stage}, {"partitions", std::move(parts)}});
    }
    doc["stages"] = std::move(stages);
    return doc.dump(1);
}

std::vector<ValueFunction> load_values(std::string_view text) {
    const json doc = parse_doc(text, kValuesFormat);
    try {
        const int dims = doc.at("dims").get<int>();
        if (dims < 1 || dims > kMaxDims) throw ParseError("dump: dims out of range");
        std::vector<ValueFunction> out;
        for (const auto& sj : doc.at("stages")) {
            ValueFunction v;
            v.stage = sj.at("stage").get<int>();
            for (const auto& pj : sj.at("partitions"))
                v.states.push_back(tree_from_json<PwlcSet>(pj, dims, [dims](const json& lj) { return fns_from_json(lj.at("fns"), dims); }));
            out.push_back(std::move(v));
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("dump: ") + e.what());
    }
}

std::string dump_policies(const std::vector<Policy>& policies, const HybridMdp& m) {
    json doc{{"format", kPoliciesFormat}, {"dims", m.dims}, {"states", m.discrete_states}, {"actions", m.actions}};
    json stages = json::array();
    for (const auto& pol : policies) {
        json parts = json::array();
        for (const auto& p : pol.states)
            parts.push_back(tree_json(p, [&](const PolicyLeaf& lf) {
                json acts = json::array();
                for (int a : lf.actions) acts.push_back(m.actions.at(static_cast<std::size_t>(a)));
                return json{{"fns", fns_json(lf.fns)}, {"actions", std::move(acts)}};
            }));
        stages.push_back({{"stage", pol.stage}, {"partitions", std::move(parts)}});
    }
    doc["stages"] = std::move(stages);
    return doc.dump(1);
}

std::vector<Policy> load_policies(std::string_view text, const HybridMdp& m) {
    const json doc = parse_doc(text, kPoliciesFormat);
    try {
        const int dims = doc.at("dims").get<int>();
        if (dims != m.dims) throw ParseError("policy dump: dims differ from the model");
        std::vector<Policy> out;
        for (const auto& sj : doc.at("stages")) {
            Policy pol;
            pol.stage = sj.at("stage").get<int>();
            for (const auto& pj : sj.at("partitions"))
                pol.states.push_back(tree_from_json<PolicyLeaf>(pj, dims, [&](const json& lj) {
                    PolicyLeaf lf{fns_from_json(lj.at("fns"), dims), {}};
                    for (const auto& a : lj.at("actions")) {
                        const auto idx = m.action_index(a.get<std::string>());
                        if (!idx) throw ParseError("policy dump: unknown action '" + a.get<std::string>() + "'");
                        lf.actions.push_back(*idx);
                    }
                    if (lf.actions.size() != lf.fns.size()) throw ParseError("policy dump: one action per function expected");
                    return lf;
                }));
            out.push_back(std::move(pol));
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("policy dump: ") + e.what());
    }
}

std::string stats_csv(const std::vector<StageStats>& stats, const HybridMdp& m) {
    std::ostringstream os;
    os << "stage,state,leaves,vectors,seconds\n";
    for (const auto& s : stats)
        os << s.stage << ',' << m.discrete_states.at(static_cast<std::size_t>(s.state)) << ',' << s.leaves << ',' << s.vectors << ','
           << format_real(s.seconds) << '\n';
    return os.str();
}

std::vector<StageStats> parse_stats_csv(std::string_view text, const HybridMdp& m) {
    std::vector<StageStats> out;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "stage,state,leaves,vectors,seconds") throw ParseError("stats csv: unexpected header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 5) throw ParseError("stats csv: expected 5 fields in '" + line + "'");
        const auto s = m.state_index(f[1]);
        if (!s) throw ParseError("stats csv: unknown state '" + f[1] + "'");
        try {
            out.push_back({std::stoi(f[0]), *s, std::stoull(f[2]), std::stoull(f[3]), std::stod(f[4])});
        } catch (const std::exception&) {
            throw ParseError("stats csv: malformed row '" + line + "'");
        }
    }
    return out;
}

std::string leaf_csv(const ValuePartition& p) {
    std::ostringstream os;
    const int d = p.dims();
    for (int k = 0; k < d; ++k) os << "low_" << k << ',';
    for (int k = 0; k < d; ++k) os << "high_" << k << ',';
    os << "vectors,fns\n";
    for (const auto& lf : p.leaves()) {
        for (int k = 0; k < d; ++k) os << format_real(lf.rect.low(k)) << ',';
        for (int k = 0; k < d; ++k) os << format_real(lf.rect.high(k)) << ',';
        os << lf.payload.size() << ',';
        for (std::size_t i = 0; i < lf.payload.size(); ++i) {
            if (i) os << ';';
            for (double c : lf.payload.coeffs(i)) os << format_real(c) << ' ';
            os << format_real(lf.payload.offset(i));
        }
        os << '\n';
    }
    return os.str();
}

} // namespace kdmdp
