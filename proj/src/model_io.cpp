#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kdmdp/model.hpp"

namespace kdmdp {

using nlohmann::json;

namespace {

class Reader {
public:
    const json& at(const json& j, const char* key, const std::string& path) {
        if (!j.is_object()) fail(path, "expected an object");
        auto it = j.find(key);
        if (it == j.end()) fail(path, std::string("missing key '") + key + "'");
        return *it;
    }

    double number(const json& j, const std::string& path) {
        if (!j.is_number()) fail(path, "expected a number");
        return j.get<double>();
    }

    int integer(const json& j, const std::string& path) {
        if (!j.is_number_integer()) fail(path, "expected an integer");
        return j.get<int>();
    }

    std::string string(const json& j, const std::string& path) {
        if (!j.is_string()) fail(path, "expected a string");
        return j.get<std::string>();
    }

    const json& array(const json& j, const std::string& path) {
        if (!j.is_array()) fail(path, "expected an array");
        return j;
    }

    std::vector<double> numbers(const json& j, const std::string& path) {
        array(j, path);
        std::vector<double> out;
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

    Rect rect(const json& j, const std::string& path) {
        auto lo = numbers(at(j, "low", path), path + ".low");
        auto hi = numbers(at(j, "high", path), path + ".high");
        try {
            return Rect(lo, hi);
        } catch (const DomainError& e) {
            fail(path, e.what());
        }
    }

    [[noreturn]] void fail(const std::string& path, const std::string& msg) {
        throw ParseError(path + ": " + msg);
    }
};

template <class P, class F>
std::optional<KdPartition<P>> read_partition(Reader& rd, const json& j, const std::string& path, int dims,
                                             std::vector<Violation>& violations, F&& payload) {
    rd.array(j, path);
    std::vector<typename KdPartition<P>::Leaf> leaves;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string lp = path + "[" + std::to_string(i) + "]";
        Rect r = rd.rect(rd.at(j[i], "rect", lp), lp + ".rect");
        if (r.dims() != dims) rd.fail(lp + ".rect", "dimension differs from model dims");
        leaves.push_back({r, payload(j[i], lp)});
    }
    try {
        return partition_from_leaves<P>(Rect::unit(dims), std::move(leaves));
    } catch (const DomainError& e) {
        violations.push_back({path, e.what()});
        return std::nullopt;
    }
}

json rect_json(const Rect& r) {
    return json{{"low", std::vector<double>(r.lows().begin(), r.lows().end())},
                {"high", std::vector<double>(r.highs().begin(), r.highs().end())}};
}

json pwlc_json(const PwlcSet& s) {
    json fns = json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Point c = s.coeffs(i);
        fns.push_back({{"coeffs", std::vector<double>(c.begin(), c.end())}, {"offset", s.offset(i)}});
    }
    return fns;
}

} // namespace

HybridMdp load_model(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model document: ") + e.what());
    }
    Reader rd;
    HybridMdp m;
    m.dims = rd.integer(rd.at(doc, "dims", "$"), "$.dims");
    if (m.dims < 1 || m.dims > kMaxDims) rd.fail("$.dims", "must be in 1.." + std::to_string(kMaxDims));
    for (const auto& s : rd.array(rd.at(doc, "discrete_states", "$"), "$.discrete_states"))
        m.discrete_states.push_back(rd.string(s, "$.discrete_states[]"));
    for (const auto& a : rd.array(rd.at(doc, "actions", "$"), "$.actions")) m.actions.push_back(rd.string(a, "$.actions[]"));
    m.horizon = rd.integer(rd.at(doc, "horizon", "$"), "$.horizon");
    if (auto it = doc.find("out_of_bounds_value"); it != doc.end()) m.out_of_bounds_value = rd.number(*it, "$.out_of_bounds_value");
    if (auto it = doc.find("metadata"); it != doc.end() && it->is_object())
        for (const auto& [k, v] : it->items()) m.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();

    std::vector<Violation> violations;
    const json& entries = rd.array(rd.at(doc, "entries", "$"), "$.entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const json& ej = entries[i];
        const std::string ep = "$.entries[" + std::to_string(i) + "]";
        if (auto it = ej.find("applicable"); it != ej.end() && it->is_boolean() && !it->get<bool>()) continue;
        const std::string sname = rd.string(rd.at(ej, "state", ep), ep + ".state");
        const std::string aname = rd.string(rd.at(ej, "action", ep), ep + ".action");
        const auto s = m.state_index(sname);
        const auto a = m.action_index(aname);
        if (!s) rd.fail(ep + ".state", "unknown discrete state '" + sname + "'");
        if (!a) rd.fail(ep + ".action", "unknown action '" + aname + "'");

        auto reward = read_partition<PwlcSet>(rd, rd.at(ej, "reward", ep), ep + ".reward", m.dims, violations,
                                              [&](const json& leaf, const std::string& lp) {
                                                  std::vector<LinearFn> fns;
                                                  const json& arr = rd.array(rd.at(leaf, "linear_fns", lp), lp + ".linear_fns");
                                                  for (std::size_t k = 0; k < arr.size(); ++k) {
                                                      const std::string fp = lp + ".linear_fns[" + std::to_string(k) + "]";
                                                      fns.push_back({rd.numbers(rd.at(arr[k], "coeffs", fp), fp + ".coeffs"),
                                                                     rd.number(rd.at(arr[k], "offset", fp), fp + ".offset")});
                                                  }
                                                  try {
                                                      return PwlcSet(m.dims, fns);
                                                  } catch (const DomainError& e) {
                                                      rd.fail(lp + ".linear_fns", e.what());
                                                  }
                                              });
        auto discrete = read_partition<SuccessorDist>(rd, rd.at(ej, "discrete_transition", ep), ep + ".discrete_transition", m.dims,
                                                      violations, [&](const json& leaf, const std::string& lp) {
                                                          SuccessorDist dist;
                                                          const json& succ = rd.at(leaf, "successors", lp);
                                                          if (!succ.is_object()) rd.fail(lp + ".successors", "expected an object");
                                                          for (const auto& [name, p] : succ.items()) {
                                                              const auto si = m.state_index(name);
                                                              if (!si) rd.fail(lp + ".successors", "unknown discrete state '" + name + "'");
                                                              dist.successors.emplace_back(*si, rd.number(p, lp + ".successors." + name));
                                                          }
                                                          std::sort(dist.successors.begin(), dist.successors.end());
                                                          return dist;
                                                      });
        std::map<int, TransitionModel> continuous;
        const json& cj = rd.at(ej, "continuous", ep);
        if (!cj.is_object()) rd.fail(ep + ".continuous", "expected an object keyed by successor state");
        for (const auto& [name, part] : cj.items()) {
            const std::string cp = ep + ".continuous." + name;
            const auto si = m.state_index(name);
            if (!si) rd.fail(cp, "unknown discrete state '" + name + "'");
            auto t = read_partition<OutcomeSet>(rd, part, cp, m.dims, violations, [&](const json& leaf, const std::string& lp) {
                OutcomeSet os;
                const json& arr = rd.array(rd.at(leaf, "outcomes", lp), lp + ".outcomes");
                for (std::size_t k = 0; k < arr.size(); ++k) {
                    const std::string op = lp + ".outcomes[" + std::to_string(k) + "]";
                    Outcome o;
                    const std::string kind = rd.string(rd.at(arr[k], "kind", op), op + ".kind");
                    if (kind == "relative")
                        o.kind = OutcomeKind::relative;
                    else if (kind == "absolute")
                        o.kind = OutcomeKind::absolute;
                    else
                        rd.fail(op + ".kind", "must be 'relative' or 'absolute'");
                    o.target = rd.numbers(rd.at(arr[k], "target", op), op + ".target");
                    o.prob = rd.number(rd.at(arr[k], "prob", op), op + ".prob");
                    os.outcomes.push_back(std::move(o));
                }
                return os;
            });
            if (t) continuous.emplace(*si, std::move(*t));
        }
        if (reward && discrete)
            m.entries.push_back(ModelEntry{*s, *a, std::move(*reward), std::move(*discrete), std::move(continuous)});
    }
    if (!violations.empty()) throw ModelValidationError(std::move(violations));
    if (auto v = validate(m); !v.empty()) throw ModelValidationError(std::move(v));
    return m;
}

HybridMdp load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_model(ss.str());
}

std::string save_model(const HybridMdp& m, int indent) {
    json doc;
    doc["dims"] = m.dims;
    doc["discrete_states"] = m.discrete_states;
    doc["actions"] = m.actions;
    doc["horizon"] = m.horizon;
    doc["out_of_bounds_value"] = m.out_of_bounds_value;
    if (!m.metadata.empty()) doc["metadata"] = m.metadata;
    json entries = json::array();
    for (const auto& e : m.entries) {
        json ej;
        ej["state"] = m.discrete_states.at(static_cast<std::size_t>(e.state));
        ej["action"] = m.actions.at(static_cast<std::size_t>(e.action));
        json reward = json::array();
        for (const auto& lf : e.reward.leaves()) reward.push_back({{"rect", rect_json(lf.rect)}, {"linear_fns", pwlc_json(lf.payload)}});
        ej["reward"] = std::move(reward);
        json discrete = json::array();
        for (const auto& lf : e.discrete.leaves()) {
            json succ = json::object();
            for (const auto& [s, p] : lf.payload.successors) succ[m.discrete_states.at(static_cast<std::size_t>(s))] = p;
            discrete.push_back({{"rect", rect_json(lf.rect)}, {"successors", std::move(succ)}});
        }
        ej["discrete_transition"] = std::move(discrete);
        json cont = json::object();
        for (const auto& [s, t] : e.continuous) {
            json part = json::array();
            for (const auto& lf : t.leaves()) {
                json outs = json::array();
                for (const auto& o : lf.payload.outcomes)
                    outs.push_back({{"kind", o.kind == OutcomeKind::relative ? "relative" : "absolute"}, {"target", o.target}, {"prob", o.prob}});
                part.push_back({{"rect", rect_json(lf.rect)}, {"outcomes", std::move(outs)}});
            }
            cont[m.discrete_states.at(static_cast<std::size_t>(s))] = std::move(part);
        }
        ej["continuous"] = std::move(cont);
        entries.push_back(std::move(ej));
    }
    doc["entries"] = std::move(entries);
    return doc.dump(indent);
}

} // namespace kdmdp
