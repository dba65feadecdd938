#include "treewit/io.hpp"

#include <map>
#include <set>
#include <sstream>

#include "treewit/error.hpp"

namespace treewit {

namespace {

struct Line {
    int number = 0;
    std::vector<std::string> tokens;
};

std::vector<Line> tokenize(const std::string& text) {
    std::vector<Line> lines;
    std::istringstream in(text);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        std::istringstream ls(raw);
        Line line;
        line.number = number;
        std::string tok;
        while (ls >> tok) line.tokens.push_back(tok);
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw Error("line " + std::to_string(line) + ": " + what);
}

int parse_state(const Line& line, const std::string& tok, int num_states) {
    try {
        std::size_t pos = 0;
        int s = std::stoi(tok, &pos);
        if (pos != tok.size() || s < 0) fail(line.number, "bad state id '" + tok + "'");
        if (num_states >= 0 && s >= num_states)
            fail(line.number, "state id " + tok + " out of range");
        return s;
    } catch (const Error&) {
        throw;
    } catch (...) {
        fail(line.number, "bad state id '" + tok + "'");
    }
}

Rational parse_prob(const Line& line, const std::string& tok) {
    auto r = try_parse_rational(tok);
    if (!r) fail(line.number, "malformed rational '" + tok + "'");
    return *r;
}

}  // namespace

Mdp parse_model(const std::string& text) {
    auto lines = tokenize(text);
    if (lines.empty()) throw Error("line 1: empty model file");
    std::size_t i = 0;
    const auto& head = lines[i];
    bool dtmc = false;
    if (head.tokens == std::vector<std::string>{"dtmc"})
        dtmc = true;
    else if (head.tokens != std::vector<std::string>{"mdp"})
        fail(head.number, "expected header 'mdp' or 'dtmc'");
    ++i;
    if (i >= lines.size() || lines[i].tokens.size() != 2 || lines[i].tokens[0] != "states")
        fail(i < lines.size() ? lines[i].number : head.number, "expected 'states N'");
    int n = parse_state(lines[i], lines[i].tokens[1], -1);
    if (n <= 0) fail(lines[i].number, "state count must be positive");
    ++i;

    Mdp m(n);
    std::set<std::tuple<int, std::string, int>> seen_trans;
    for (; i < lines.size(); ++i) {
        const auto& line = lines[i];
        const auto& t = line.tokens;
        if (t[0] == "initial") {
            if (t.size() != 3) fail(line.number, "expected 'initial <s> <p/q>'");
            int s = parse_state(line, t[1], n);
            if (m.initial[s] != 0) fail(line.number, "duplicate initial entry for state " + t[1]);
            m.initial[s] = parse_prob(line, t[2]);
        } else if (t[0] == "goal") {
            if (t.size() != 2) fail(line.number, "expected 'goal <s>'");
            m.goal.insert(parse_state(line, t[1], n));
        } else if (t[0] == "trans") {
            if (t.size() != 5) fail(line.number, "expected 'trans <s> <label> <s'> <p/q>'");
            int s = parse_state(line, t[1], n);
            int target = parse_state(line, t[3], n);
            if (!seen_trans.insert({s, t[2], target}).second)
                fail(line.number, "duplicate transition " + t[1] + " " + t[2] + " " + t[3]);
            Rational p = parse_prob(line, t[4]);
            if (p < 0 || p > 1) fail(line.number, "probability outside [0,1]");
            m.add_transition(s, t[2], target, p);
        } else {
            fail(line.number, "unknown directive '" + t[0] + "'");
        }
    }
    if (dtmc) {
        for (int s = 0; s < n; ++s)
            if (m.actions[s].size() > 1)
                throw Error("dtmc declares several actions for state " + std::to_string(s));
    }
    return m;
}

std::string write_model(const Mdp& m) {
    std::ostringstream out;
    out << (m.is_dtmc() ? "dtmc" : "mdp") << "\n";
    out << "states " << m.num_states << "\n";
    for (int s = 0; s < m.num_states; ++s)
        if (m.initial[s] != 0) out << "initial " << s << " " << to_string(m.initial[s]) << "\n";
    for (int s : m.goal.elements()) out << "goal " << s << "\n";
    for (int s = 0; s < m.num_states; ++s)
        for (const auto& act : m.actions[s])
            for (const auto& tr : act.transitions)
                out << "trans " << s << " " << act.label << " " << tr.target << " "
                    << to_string(tr.prob) << "\n";
    return out.str();
}

DirectedTreePartition parse_partition(const std::string& text, const Mdp& m) {
    auto lines = tokenize(text);
    std::map<int, std::vector<int>> by_id;
    for (const auto& line : lines) {
        const auto& t = line.tokens;
        if (t.size() < 3 || t[0] != "block" || t[2] != ":")
            fail(line.number, "expected 'block <id> : s1 s2 ...'");
        int id = parse_state(line, t[1], -1);
        if (by_id.count(id)) fail(line.number, "duplicate block id " + t[1]);
        std::vector<int> states;
        for (std::size_t j = 3; j < t.size(); ++j)
            states.push_back(parse_state(line, t[j], m.num_states));
        if (states.empty()) fail(line.number, "empty block");
        by_id[id] = std::move(states);
    }
    if (by_id.empty()) throw Error("line 1: no blocks in partition file");
    Blocks blocks;
    int expect = 0;
    for (const auto& [id, states] : by_id) {
        if (id != expect)
            throw Error("block ids must be contiguous from 0, missing " + std::to_string(expect));
        ++expect;
        blocks.push_back(states);
    }
    auto p = DirectedTreePartition::build(underlying_graph(m), std::move(blocks));
    auto errs = validate_partition(m, p);
    if (!errs.empty()) throw Error("invalid partition: " + errs.front());
    return p;
}

std::string write_partition(const DirectedTreePartition& p) {
    std::ostringstream out;
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        out << "block " << b << " :";
        for (int s : p.blocks[b]) out << " " << s;
        out << "\n";
    }
    return out.str();
}

McpInstance parse_mcp(const std::string& text) {
    auto lines = tokenize(text);
    if (lines.empty()) throw Error("line 1: empty mcp file");
    std::size_t i = 0;
    const auto& head = lines[0];
    if (head.tokens.size() != 3 || head.tokens[0] != "mcp" ||
        head.tokens[1].rfind("d=", 0) != 0 || head.tokens[2].rfind("n=", 0) != 0)
        fail(head.number, "expected header 'mcp d=<d> n=<n>'");
    int d = parse_state(head, head.tokens[1].substr(2), -1);
    int n = parse_state(head, head.tokens[2].substr(2), -1);
    if (d <= 0) fail(head.number, "dimension must be positive");
    ++i;

    McpInstance inst;
    inst.dimension = d;
    auto parse_vec = [&](const char* name) {
        if (i >= lines.size() || lines[i].tokens.empty() || lines[i].tokens[0] != name)
            fail(i < lines.size() ? lines[i].number : head.number,
                 std::string("expected '") + name + "' line");
        const auto& line = lines[i];
        if (static_cast<int>(line.tokens.size()) != d + 1)
            fail(line.number, std::string(name) + " needs exactly " + std::to_string(d) +
                                  " entries");
        std::vector<Rational> v;
        for (int j = 1; j <= d; ++j) v.push_back(parse_prob(line, line.tokens[j]));
        ++i;
        return v;
    };
    inst.iota = parse_vec("iota");
    inst.final_vec = parse_vec("final");
    if (i >= lines.size() || lines[i].tokens.size() != 2 || lines[i].tokens[0] != "lambda")
        fail(i < lines.size() ? lines[i].number : head.number, "expected 'lambda <p/q>'");
    inst.lambda = parse_prob(lines[i], lines[i].tokens[1]);
    ++i;

    auto parse_matrix = [&](int pair_no) {
        Matrix m;
        for (int r = 0; r < d; ++r) {
            if (i >= lines.size())
                throw Error("unexpected end of file inside pair " + std::to_string(pair_no));
            const auto& line = lines[i];
            if (static_cast<int>(line.tokens.size()) != d)
                fail(line.number, "matrix row needs exactly " + std::to_string(d) + " entries");
            std::vector<Rational> row;
            for (const auto& tok : line.tokens) row.push_back(parse_prob(line, tok));
            m.push_back(std::move(row));
            ++i;
        }
        return m;
    };
    for (int j = 1; j <= n; ++j) {
        if (i >= lines.size() || lines[i].tokens.size() != 2 || lines[i].tokens[0] != "pair" ||
            lines[i].tokens[1] != std::to_string(j))
            fail(i < lines.size() ? lines[i].number : head.number,
                 "expected 'pair " + std::to_string(j) + "'");
        ++i;
        Matrix m0 = parse_matrix(j);
        Matrix m1 = parse_matrix(j);
        inst.pairs.push_back({std::move(m0), std::move(m1)});
    }
    if (i != lines.size()) fail(lines[i].number, "trailing content after the last pair");
    inst.refresh_nonneg();
    auto errs = validate_mcp(inst);
    if (!errs.empty()) throw Error("invalid mcp instance: " + errs.front());
    return inst;
}

std::string write_mcp(const McpInstance& inst) {
    std::ostringstream out;
    out << "mcp d=" << inst.dimension << " n=" << inst.n() << "\n";
    auto vec = [&](const char* name, const std::vector<Rational>& v) {
        out << name;
        for (const auto& e : v) out << " " << to_string(e);
        out << "\n";
    };
    vec("iota", inst.iota);
    vec("final", inst.final_vec);
    out << "lambda " << to_string(inst.lambda) << "\n";
    for (int j = 0; j < inst.n(); ++j) {
        out << "pair " << j + 1 << "\n";
        for (const auto& m : inst.pairs[j]) {
            for (const auto& row : m) {
                for (std::size_t c = 0; c < row.size(); ++c)
                    out << (c ? " " : "") << to_string(row[c]);
                out << "\n";
            }
        }
    }
    return out.str();
}

}  // namespace treewit
