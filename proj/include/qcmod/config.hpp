#pragma once

#include "qcmod/geometry.hpp"

#include <charconv>
#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcmod {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One parsed entry of the structured text format: `key v1 v2 ...` or `key { ... }`.
struct ConfigNode {
    std::string key;
    int line = 0;
    std::vector<std::string> values;
    std::vector<ConfigNode> children;
    bool block = false;
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : line) {
        if (c == '#') break;
        if (c == ' ' || c == '\t' || c == '\r') {
            if (!cur.empty()) {
                toks.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) toks.push_back(cur);
    return toks;
}

} // namespace detail

/// Parse the nested key-value text into a root node (strict structural check;
/// key-level validation happens in Section).
inline ConfigNode parse_config_text(const std::string& text) {
    ConfigNode root;
    root.key = "<root>";
    root.block = true;
    std::vector<ConfigNode*> stack{&root};
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = detail::tokenize(line);
        if (toks.empty()) continue;
        if (toks.size() == 1 && toks[0] == "}") {
            if (stack.size() == 1) throw config_error("line " + std::to_string(lineno) + ": unmatched '}'");
            stack.pop_back();
            continue;
        }
        ConfigNode node;
        node.key = toks[0];
        node.line = lineno;
        bool opens = toks.back() == "{";
        for (std::size_t i = 1; i + (opens ? 1 : 0) < toks.size(); ++i) node.values.push_back(toks[i]);
        node.block = opens;
        stack.back()->children.push_back(std::move(node));
        if (opens) stack.push_back(&stack.back()->children.back());
    }
    if (stack.size() != 1) throw config_error("unterminated block '" + stack.back()->key +
                                              "' opened at line " + std::to_string(stack.back()->line));
    return root;
}

/// Strict accessor over a ConfigNode: every child must be consumed exactly once
/// (or through a repeated-key accessor); finish() rejects unknown keys, and scalar
/// duplicates are diagnosed with both line numbers.
class Section {
public:
    explicit Section(const ConfigNode& node) : node_(&node), used_(node.children.size(), false) {}

    const ConfigNode& node() const { return *node_; }

    bool has(const std::string& key) const {
        for (const auto& c : node_->children)
            if (c.key == key) return true;
        return false;
    }

    const ConfigNode& child(const std::string& key) {
        const ConfigNode* found = nullptr;
        for (std::size_t i = 0; i < node_->children.size(); ++i) {
            if (node_->children[i].key != key) continue;
            if (found)
                throw config_error("duplicate key '" + key + "' at lines " +
                                   std::to_string(found->line) + " and " +
                                   std::to_string(node_->children[i].line));
            found = &node_->children[i];
            used_[i] = true;
        }
        if (!found)
            throw config_error("missing required key '" + key + "' in '" + node_->key + "'" +
                               (node_->line ? " (line " + std::to_string(node_->line) + ")" : ""));
        return *found;
    }

    const ConfigNode* opt_child(const std::string& key) {
        const ConfigNode* found = nullptr;
        for (std::size_t i = 0; i < node_->children.size(); ++i) {
            if (node_->children[i].key != key) continue;
            if (found)
                throw config_error("duplicate key '" + key + "' at lines " +
                                   std::to_string(found->line) + " and " +
                                   std::to_string(node_->children[i].line));
            found = &node_->children[i];
            used_[i] = true;
        }
        return found;
    }

    std::vector<const ConfigNode*> repeated(const std::string& key) {
        std::vector<const ConfigNode*> out;
        for (std::size_t i = 0; i < node_->children.size(); ++i)
            if (node_->children[i].key == key) {
                out.push_back(&node_->children[i]);
                used_[i] = true;
            }
        return out;
    }

    double number(const std::string& key) { return to_number(child(key)); }

    double number_or(const std::string& key, double dflt) {
        auto* c = opt_child(key);
        return c ? to_number(*c) : dflt;
    }

    long integer(const std::string& key) { return static_cast<long>(to_number(child(key))); }

    std::string word(const std::string& key) { return to_word(child(key)); }

    std::string word_or(const std::string& key, const std::string& dflt) {
        auto* c = opt_child(key);
        return c ? to_word(*c) : dflt;
    }

    std::vector<double> numbers(const std::string& key) {
        const auto& c = child(key);
        return to_numbers(c);
    }

    Point point(const std::string& key, int dim = 2) {
        const auto& c = child(key);
        auto vals = to_numbers(c);
        if (static_cast<int>(vals.size()) != dim)
            throw config_error("key '" + key + "' at line " + std::to_string(c.line) + " expects " +
                               std::to_string(dim) + " coordinates");
        Point p{0.0, 0.0, 0.0};
        for (int i = 0; i < dim; ++i) p[i] = vals[i];
        return p;
    }

    bool flag_or(const std::string& key, bool dflt) {
        auto* c = opt_child(key);
        if (!c) return dflt;
        auto w = to_word(*c);
        if (w == "on" || w == "true" || w == "1") return true;
        if (w == "off" || w == "false" || w == "0") return false;
        throw config_error("key '" + key + "' at line " + std::to_string(c->line) +
                           " expects on/off");
    }

    /// Rejects unconsumed (unknown) keys; call once all expected keys are read.
    void finish() const {
        for (std::size_t i = 0; i < node_->children.size(); ++i)
            if (!used_[i])
                throw config_error("unknown key '" + node_->children[i].key + "' at line " +
                                   std::to_string(node_->children[i].line));
    }

    static double to_number(const ConfigNode& c) {
        if (c.values.size() != 1 || c.block)
            throw config_error("key '" + c.key + "' at line " + std::to_string(c.line) +
                               " expects a single numeric value");
        return parse_double(c.values[0], c);
    }

    static std::string to_word(const ConfigNode& c) {
        if (c.values.size() != 1 || c.block)
            throw config_error("key '" + c.key + "' at line " + std::to_string(c.line) +
                               " expects a single value");
        return c.values[0];
    }

    static std::vector<double> to_numbers(const ConfigNode& c) {
        if (c.values.empty() || c.block)
            throw config_error("key '" + c.key + "' at line " + std::to_string(c.line) +
                               " expects numeric values");
        std::vector<double> out;
        for (const auto& v : c.values) out.push_back(parse_double(v, c));
        return out;
    }

    static double parse_double(const std::string& s, const ConfigNode& c) {
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0')
            throw config_error("key '" + c.key + "' at line " + std::to_string(c.line) +
                               ": '" + s + "' is not a number");
        return v;
    }

private:
    const ConfigNode* node_;
    mutable std::vector<bool> used_;
};

} // namespace qcmod
