#pragma once

// Combinational netlist model and its line-based text format.
//
//   input <net>                      one per line, declaration order = bit position (bit 0 first)
//   output <net>
//   table <KIND> <arity> <bitstring> custom truth-table kind, bitstring indexed by local vector
//                                    value (character 0 = all-zero input)
//   gate <id> <KIND> <in1> [...] -> <out>
//
// '#' starts a comment. Gate ids are dense 0..N-1 in declaration order.

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sco {

enum class errc {
    syntax,
    unknown_kind,
    arity_mismatch,
    multiply_driven_net,
    undriven_net,
    combinational_cycle,
    width_mismatch,
    grid_mismatch,
    validation,
    capacity,
    io,
};

class error : public std::runtime_error {
  public:
    error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    errc code() const noexcept { return code_; }

  private:
    errc code_;
};

// Composite blocks wider than this are rejected: the transition alphabet grows as
// 2^n * (2^n - 1) and becomes unusable long before it becomes unallocatable.
inline constexpr int default_arity_cap = 8;

struct gate_kind {
    std::string name;
    int arity = 0;
    std::vector<std::uint8_t> truth_table;  // 2^arity entries, index = local input value
    bool builtin = false;
};

struct gate {
    std::string name;
    int kind = -1;               // index into circuit::kinds()
    std::vector<int> inputs;     // net ids; position i is bit i of the local vector
    int output = -1;             // net id
};

struct net {
    std::string name;
    int driver_gate = -1;        // -1 when driven by a primary input (or undriven pre-validation)
    int pi_index = -1;           // bit position when this net is a primary input
    std::vector<int> sinks;      // gate ids reading this net, one entry per fanin pin
    bool is_primary_output = false;
};

inline const std::vector<gate_kind>& builtin_kinds() {
    static const std::vector<gate_kind> kinds = {
        {"INV", 1, {1, 0}, true},
        {"BUF", 1, {0, 1}, true},
        {"AND2", 2, {0, 0, 0, 1}, true},
        {"NAND2", 2, {1, 1, 1, 0}, true},
        {"OR2", 2, {0, 1, 1, 1}, true},
        {"NOR2", 2, {1, 0, 0, 0}, true},
        {"XOR2", 2, {0, 1, 1, 0}, true},
        {"XNOR2", 2, {1, 0, 0, 1}, true},
    };
    return kinds;
}

class netlist_builder;

// Immutable after construction; share freely across threads.
class circuit {
  public:
    circuit() = default;

    const std::vector<gate_kind>& kinds() const { return kinds_; }
    const std::vector<gate>& gates() const { return gates_; }
    const std::vector<net>& nets() const { return nets_; }
    const std::vector<int>& primary_inputs() const { return primary_inputs_; }
    const std::vector<int>& primary_outputs() const { return primary_outputs_; }
    const std::vector<int>& topological_order() const { return topo_order_; }

    int width() const { return static_cast<int>(primary_inputs_.size()); }
    int gate_count() const { return static_cast<int>(gates_.size()); }
    int net_count() const { return static_cast<int>(nets_.size()); }

    const gate_kind& kind_of(int gate_id) const { return kinds_[gates_[gate_id].kind]; }
    int arity_of(int gate_id) const { return kind_of(gate_id).arity; }

    int find_net(std::string_view name) const {
        auto it = net_index_.find(std::string(name));
        return it == net_index_.end() ? -1 : it->second;
    }

    int find_gate(std::string_view name) const {
        for (int g = 0; g < gate_count(); ++g)
            if (gates_[g].name == name) return g;
        return -1;
    }

  private:
    friend class netlist_builder;

    std::vector<gate_kind> kinds_;
    std::vector<gate> gates_;
    std::vector<net> nets_;
    std::vector<int> primary_inputs_;
    std::vector<int> primary_outputs_;
    std::vector<int> topo_order_;
    std::unordered_map<std::string, int> net_index_;
};

class netlist_builder {
  public:
    netlist_builder() {
        for (const auto& k : builtin_kinds()) {
            kind_index_[k.name] = static_cast<int>(kinds_.size());
            kinds_.push_back(k);
        }
    }

    void add_input(const std::string& name) {
        int id = intern_net(name);
        if (nets_[id].pi_index >= 0 || nets_[id].driver_gate >= 0)
            throw error(errc::multiply_driven_net, "net '" + name + "' is already driven");
        nets_[id].pi_index = static_cast<int>(primary_inputs_.size());
        primary_inputs_.push_back(id);
    }

    void add_output(const std::string& name) {
        int id = intern_net(name);
        if (nets_[id].is_primary_output)
            throw error(errc::validation, "net '" + name + "' declared output twice");
        nets_[id].is_primary_output = true;
        primary_outputs_.push_back(id);
    }

    void add_kind(const std::string& name, int arity, const std::string& bits) {
        if (kind_index_.count(name))
            throw error(errc::validation, "gate kind '" + name + "' already declared");
        if (arity < 1)
            throw error(errc::validation, "gate kind '" + name + "' must have arity >= 1");
        if (arity > default_arity_cap)
            throw error(errc::capacity, "gate kind '" + name + "' arity " + std::to_string(arity) +
                                            " exceeds cap " + std::to_string(default_arity_cap));
        const std::size_t want = std::size_t{1} << arity;
        if (bits.size() != want)
            throw error(errc::validation, "gate kind '" + name + "' needs a " + std::to_string(want) +
                                              "-bit truth table, got " + std::to_string(bits.size()));
        gate_kind k{name, arity, {}, false};
        k.truth_table.reserve(want);
        for (char c : bits) {
            if (c != '0' && c != '1')
                throw error(errc::validation, "gate kind '" + name + "': truth table must be 0/1");
            k.truth_table.push_back(static_cast<std::uint8_t>(c - '0'));
        }
        kind_index_[name] = static_cast<int>(kinds_.size());
        kinds_.push_back(std::move(k));
    }

    void add_gate(const std::string& name, const std::string& kind_name,
                  const std::vector<std::string>& input_names, const std::string& output_name) {
        auto kit = kind_index_.find(kind_name);
        if (kit == kind_index_.end())
            throw error(errc::unknown_kind, "unknown gate kind '" + kind_name + "' for gate '" + name + "'");
        const gate_kind& kind = kinds_[kit->second];
        if (static_cast<int>(input_names.size()) != kind.arity)
            throw error(errc::arity_mismatch, "gate '" + name + "' (" + kind_name + ") expects " +
                                                  std::to_string(kind.arity) + " inputs, got " +
                                                  std::to_string(input_names.size()));
        if (gate_names_.count(name))
            throw error(errc::validation, "gate '" + name + "' declared twice");

        gate g;
        g.name = name;
        g.kind = kit->second;
        for (const auto& in : input_names) g.inputs.push_back(intern_net(in));
        int out = intern_net(output_name);
        if (nets_[out].pi_index >= 0 || nets_[out].driver_gate >= 0)
            throw error(errc::multiply_driven_net, "net '" + output_name + "' is already driven");
        g.output = out;

        const int id = static_cast<int>(gates_.size());
        nets_[out].driver_gate = id;
        for (int in : g.inputs) nets_[in].sinks.push_back(id);
        gate_names_.insert(name);
        gates_.push_back(std::move(g));
    }

    circuit build() {
        for (const auto& n : nets_)
            if (n.driver_gate < 0 && n.pi_index < 0)
                throw error(errc::undriven_net, "net '" + n.name + "' is not driven");

        circuit c;
        c.kinds_ = kinds_;
        c.gates_ = gates_;
        c.nets_ = nets_;
        c.primary_inputs_ = primary_inputs_;
        c.primary_outputs_ = primary_outputs_;
        c.net_index_ = net_index_;
        c.topo_order_ = topological_sort();
        return c;
    }

  private:
    int intern_net(const std::string& name) {
        auto it = net_index_.find(name);
        if (it != net_index_.end()) return it->second;
        int id = static_cast<int>(nets_.size());
        net_index_[name] = id;
        nets_.push_back(net{name, -1, -1, {}, false});
        return id;
    }

    std::vector<int> topological_sort() const {
        const int n = static_cast<int>(gates_.size());
        std::vector<int> indegree(n, 0);
        for (int g = 0; g < n; ++g)
            for (int in : gates_[g].inputs)
                if (nets_[in].driver_gate >= 0) ++indegree[g];

        std::vector<int> ready;
        for (int g = 0; g < n; ++g)
            if (indegree[g] == 0) ready.push_back(g);

        std::vector<int> order;
        order.reserve(n);
        // Kahn with an index cursor; ready stays sorted by insertion, order is deterministic.
        for (std::size_t cursor = 0; cursor < ready.size(); ++cursor) {
            int g = ready[cursor];
            order.push_back(g);
            for (int sink : nets_[gates_[g].output].sinks)
                if (--indegree[sink] == 0) ready.push_back(sink);
        }
        if (static_cast<int>(order.size()) != n) {
            std::vector<char> done(n, 0);
            for (int g : order) done[g] = 1;
            for (int g = 0; g < n; ++g)
                if (!done[g])
                    throw error(errc::combinational_cycle,
                                "combinational cycle through gate '" + gates_[g].name + "'");
        }
        return order;
    }

    std::vector<gate_kind> kinds_;
    std::vector<gate> gates_;
    std::vector<net> nets_;
    std::vector<int> primary_inputs_;
    std::vector<int> primary_outputs_;
    std::unordered_map<std::string, int> net_index_;
    std::unordered_map<std::string, int> kind_index_;
    std::unordered_set<std::string> gate_names_;
};

inline std::int64_t transition_alphabet_size(int arity, int arity_cap = default_arity_cap) {
    if (arity < 1) throw error(errc::validation, "arity must be >= 1");
    if (arity > arity_cap)
        throw error(errc::capacity, "arity " + std::to_string(arity) + " exceeds cap " +
                                        std::to_string(arity_cap));
    const std::int64_t states = std::int64_t{1} << arity;
    return states * (states - 1);  // ordered distinct pairs; identity pairs draw no current
}

inline std::int64_t transition_alphabet_size(const circuit& c, int gate_id,
                                             int arity_cap = default_arity_cap) {
    if (gate_id < 0 || gate_id >= c.gate_count())
        throw error(errc::validation, "unknown gate id " + std::to_string(gate_id));
    return transition_alphabet_size(c.arity_of(gate_id), arity_cap);
}

namespace detail {

struct token {
    std::string text;
    int column = 0;
};

inline std::vector<token> tokenize_line(std::string_view line) {
    std::vector<token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == '#') break;
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != '#') ++i;
        out.push_back({std::string(line.substr(start, i - start)), static_cast<int>(start + 1)});
    }
    return out;
}

}  // namespace detail

inline circuit parse_netlist(std::string_view text) {
    netlist_builder b;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        auto tokens = detail::tokenize_line(line);
        if (tokens.empty()) continue;

        auto fail = [&](const detail::token& t, const std::string& what) -> error {
            return error(errc::syntax, "line " + std::to_string(line_no) + ", col " +
                                           std::to_string(t.column) + ": " + what);
        };

        try {
            const std::string& head = tokens[0].text;
            if (head == "input") {
                if (tokens.size() != 2) throw fail(tokens[0], "expected 'input <net>'");
                b.add_input(tokens[1].text);
            } else if (head == "output") {
                if (tokens.size() != 2) throw fail(tokens[0], "expected 'output <net>'");
                b.add_output(tokens[1].text);
            } else if (head == "table") {
                if (tokens.size() != 4) throw fail(tokens[0], "expected 'table <KIND> <arity> <bits>'");
                int arity = 0;
                try {
                    arity = std::stoi(tokens[2].text);
                } catch (const std::exception&) {
                    throw fail(tokens[2], "arity must be an integer");
                }
                b.add_kind(tokens[1].text, arity, tokens[3].text);
            } else if (head == "gate") {
                if (tokens.size() < 6) throw fail(tokens[0], "expected 'gate <id> <KIND> <in...> -> <out>'");
                if (tokens[tokens.size() - 2].text != "->")
                    throw fail(tokens[tokens.size() - 2], "expected '->' before the output net");
                std::vector<std::string> ins;
                for (std::size_t i = 3; i + 2 < tokens.size(); ++i) ins.push_back(tokens[i].text);
                b.add_gate(tokens[1].text, tokens[2].text, ins, tokens.back().text);
            } else {
                throw fail(tokens[0], "unknown directive '" + head + "'");
            }
        } catch (error& e) {
            if (e.code() == errc::syntax) throw;
            throw error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return b.build();
}

inline std::string serialize_netlist(const circuit& c) {
    std::string out;
    for (int id : c.primary_inputs()) out += "input " + c.nets()[id].name + "\n";
    for (int id : c.primary_outputs()) out += "output " + c.nets()[id].name + "\n";
    for (const auto& k : c.kinds()) {
        if (k.builtin) continue;
        out += "table " + k.name + " " + std::to_string(k.arity) + " ";
        for (auto bit : k.truth_table) out += bit ? '1' : '0';
        out += "\n";
    }
    for (const auto& g : c.gates()) {
        out += "gate " + g.name + " " + c.kinds()[g.kind].name;
        for (int in : g.inputs) out += " " + c.nets()[in].name;
        out += " -> " + c.nets()[g.output].name + "\n";
    }
    return out;
}

// Equality up to net-id renumbering: names, kinds, connectivity and port order must agree.
inline bool structurally_equal(const circuit& a, const circuit& b) {
    auto net_name = [](const circuit& c, int id) -> const std::string& { return c.nets()[id].name; };
    if (a.primary_inputs().size() != b.primary_inputs().size()) return false;
    if (a.primary_outputs().size() != b.primary_outputs().size()) return false;
    if (a.gate_count() != b.gate_count()) return false;
    for (std::size_t i = 0; i < a.primary_inputs().size(); ++i)
        if (net_name(a, a.primary_inputs()[i]) != net_name(b, b.primary_inputs()[i])) return false;
    for (std::size_t i = 0; i < a.primary_outputs().size(); ++i)
        if (net_name(a, a.primary_outputs()[i]) != net_name(b, b.primary_outputs()[i])) return false;
    for (int g = 0; g < a.gate_count(); ++g) {
        const gate& ga = a.gates()[g];
        const gate& gb = b.gates()[g];
        if (ga.name != gb.name) return false;
        const gate_kind& ka = a.kinds()[ga.kind];
        const gate_kind& kb = b.kinds()[gb.kind];
        if (ka.name != kb.name || ka.arity != kb.arity || ka.truth_table != kb.truth_table) return false;
        if (ga.inputs.size() != gb.inputs.size()) return false;
        for (std::size_t i = 0; i < ga.inputs.size(); ++i)
            if (net_name(a, ga.inputs[i]) != net_name(b, gb.inputs[i])) return false;
        if (net_name(a, ga.output) != net_name(b, gb.output)) return false;
    }
    return true;
}

}  // namespace sco
