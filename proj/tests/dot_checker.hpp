// Recursive-descent reader for the Graphviz DOT language, used to check
// exported files against the grammar and read them back.
#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace degan::testing {

struct DotEdge {
    std::string from, to;
    std::map<std::string, std::string> attrs;
};

struct DotGraph {
    bool strict = false;
    bool directed = false;
    std::string name;
    std::map<std::string, std::map<std::string, std::string>> nodes;
    std::vector<DotEdge> edges;
};

class DotParser {
public:
    explicit DotParser(std::string text) : s_(std::move(text)) {}

    DotGraph parse() {
        DotGraph g;
        graph_ = &g;
        skip();
        if (keyword("strict")) g.strict = true;
        if (keyword("digraph")) g.directed = true;
        else if (!keyword("graph")) fail("expected 'graph' or 'digraph'");
        if (!peek('{')) g.name = id();
        expect('{');
        stmt_list();
        expect('}');
        if (pos_ != s_.size()) fail("trailing input");
        return g;
    }

private:
    struct Token {
        std::string text;
        bool quoted = false;
    };

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error("DOT syntax error at offset " + std::to_string(pos_) + ": " + what);
    }

    void skip() {
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (s_.compare(pos_, 2, "//") == 0 || (c == '#' && at_line_start())) {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else if (s_.compare(pos_, 2, "/*") == 0) {
                const auto end = s_.find("*/", pos_ + 2);
                if (end == std::string::npos) fail("unterminated comment");
                pos_ = end + 2;
            } else {
                break;
            }
        }
    }

    bool at_line_start() const {
        for (std::size_t k = pos_; k > 0; --k) {
            if (s_[k - 1] == '\n') return true;
            if (!std::isspace(static_cast<unsigned char>(s_[k - 1]))) return false;
        }
        return true;
    }

    bool peek(char c) const { return pos_ < s_.size() && s_[pos_] == c; }
    bool peek_str(const char* t) const { return s_.compare(pos_, std::char_traits<char>::length(t), t) == 0; }

    bool accept(char c) {
        if (!peek(c)) return false;
        ++pos_;
        skip();
        return true;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    static bool id_start(char c) {
        return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
    }
    static bool id_char(char c) { return id_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

    // Case-insensitive keyword, not followed by an identifier character.
    bool keyword(const std::string& kw) {
        if (pos_ + kw.size() > s_.size()) return false;
        for (std::size_t k = 0; k < kw.size(); ++k)
            if (std::tolower(static_cast<unsigned char>(s_[pos_ + k])) != kw[k]) return false;
        if (pos_ + kw.size() < s_.size() && id_char(s_[pos_ + kw.size()])) return false;
        pos_ += kw.size();
        skip();
        return true;
    }

    bool at_keyword(const std::string& kw) {
        const auto saved = pos_;
        const bool hit = keyword(kw);
        pos_ = saved;
        return hit;
    }

    bool at_id() const {
        if (pos_ >= s_.size()) return false;
        const char c = s_[pos_];
        return id_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '"' || c == '<' || c == '-' ||
               c == '.';
    }

    std::string quoted_part() {
        ++pos_;
        std::string out;
        while (true) {
            if (pos_ >= s_.size()) fail("unterminated string");
            const char c = s_[pos_++];
            if (c == '"') break;
            if (c == '\\' && pos_ < s_.size()) {
                const char n = s_[pos_++];
                if (n == '"') out += '"';
                else if (n == '\n') continue;
                else {
                    out += '\\';
                    out += n;
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    std::string id() {
        if (pos_ >= s_.size()) fail("expected an ID");
        std::string out;
        const char c = s_[pos_];
        if (c == '"') {
            out = quoted_part();
            skip();
            while (accept('+')) {
                if (!peek('"')) fail("expected a string after '+'");
                out += quoted_part();
                skip();
            }
            return out;
        }
        if (c == '<') {
            int depth = 0;
            const auto start = pos_;
            do {
                if (pos_ >= s_.size()) fail("unterminated HTML string");
                if (s_[pos_] == '<') ++depth;
                else if (s_[pos_] == '>') --depth;
                ++pos_;
            } while (depth > 0);
            out = s_.substr(start, pos_ - start);
        } else if (id_start(c)) {
            while (pos_ < s_.size() && id_char(s_[pos_])) out += s_[pos_++];
            for (const char* kw : {"node", "edge", "graph", "digraph", "subgraph", "strict"}) {
                std::string lower;
                for (char ch : out) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
                if (lower == kw) fail("keyword '" + out + "' used as an ID");
            }
        } else {
            // numeral: [-]?(.[0-9]+ | [0-9]+(.[0-9]*)?)
            const auto start = pos_;
            if (peek('-')) ++pos_;
            bool digits = false;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, digits = true;
            if (peek('.')) {
                ++pos_;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, digits = true;
            }
            if (!digits) fail("expected an ID");
            out = s_.substr(start, pos_ - start);
        }
        skip();
        return out;
    }

    void stmt_list() {
        while (!peek('}')) {
            if (pos_ >= s_.size()) fail("unexpected end of input");
            stmt();
            accept(';');
        }
    }

    std::map<std::string, std::string> attr_list() {
        std::map<std::string, std::string> attrs;
        if (!peek('[')) fail("expected '['");
        while (accept('[')) {
            while (!peek(']')) {
                const auto key = id();
                expect('=');
                attrs[key] = id();
                if (!accept(';')) accept(',');
            }
            expect(']');
        }
        return attrs;
    }

    // Returns the node ids mentioned by the operand.
    std::vector<std::string> operand() {
        if (peek('{') || at_keyword("subgraph")) return subgraph();
        auto name = id();
        if (accept(':')) {
            id();
            if (accept(':')) id();
        }
        graph_->nodes.try_emplace(name);
        return {name};
    }

    std::vector<std::string> subgraph() {
        if (keyword("subgraph") && !peek('{')) id();
        expect('{');
        const auto before = graph_->nodes;
        stmt_list();
        expect('}');
        std::vector<std::string> added;
        for (const auto& [name, attrs] : graph_->nodes)
            if (!before.count(name)) added.push_back(name);
        return added;
    }

    bool edge_op() {
        if (peek_str("--")) {
            if (graph_->directed) fail("'--' in a digraph");
        } else if (peek_str("->")) {
            if (!graph_->directed) fail("'->' in an undirected graph");
        } else {
            return false;
        }
        pos_ += 2;
        skip();
        return true;
    }

    void stmt() {
        if (keyword("graph") || keyword("node") || keyword("edge")) {
            attr_list();
            return;
        }
        if (!at_id() && !peek('{') && !at_keyword("subgraph")) fail("expected a statement");
        const bool plain_id = at_id();
        const auto saved = pos_;
        if (plain_id) {
            id();
            if (accept('=')) {
                id();
                return;
            }
            pos_ = saved;
            skip();
        }
        std::vector<std::vector<std::string>> chain{operand()};
        while (edge_op()) chain.push_back(operand());
        std::map<std::string, std::string> attrs;
        if (peek('[')) attrs = attr_list();
        if (chain.size() == 1) {
            if (plain_id)
                for (const auto& [k, v] : attrs) graph_->nodes[chain[0][0]][k] = v;
            return;
        }
        for (std::size_t k = 0; k + 1 < chain.size(); ++k)
            for (const auto& a : chain[k])
                for (const auto& b : chain[k + 1]) graph_->edges.push_back({a, b, attrs});
    }

    std::string s_;
    std::size_t pos_ = 0;
    DotGraph* graph_ = nullptr;
};

/// Parses DOT text; on a syntax error returns nullopt and fills `error`.
inline std::optional<DotGraph> parse_dot(const std::string& text, std::string* error = nullptr) {
    try {
        return DotParser(text).parse();
    } catch (const std::runtime_error& e) {
        if (error) *error = e.what();
        return std::nullopt;
    }
}

}  // namespace degan::testing
