#ifndef AGENTJIT_CFG_HPP
#define AGENTJIT_CFG_HPP

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "planlang.hpp"

namespace agentjit {

struct CallSite {
    enum class Kind { Tool, AiEval };
    Kind kind = Kind::Tool;
    std::string tool_name;             // Tool only
    std::string template_text;         // AiEval only
    NamedArgs args;
    std::optional<std::string> bind;
    int depth = 0;
    SourceSpan source_span;
};

struct BasicBlock {
    std::vector<CallSite> calls;
    int depth = 0;
    std::optional<std::string> branch_tag;  // "then" / "else"
};

// Structured view of the CFG preserving loop/branch nesting; the validator
// walks this, while cost estimation only needs the flat block list.
struct CfgNode;
using CfgNodeList = std::vector<CfgNode>;

struct CfgNode {
    struct Calls { int block_index; };
    struct Loop { std::shared_ptr<CfgNodeList> body; };
    struct Branch { std::shared_ptr<CfgNodeList> then_nodes, else_nodes; };
    std::variant<Calls, Loop, Branch> node;
};

struct PlanCfg {
    std::vector<BasicBlock> blocks;                 // program order; loop bodies once
    std::vector<std::vector<int>> edges;            // successor lists by block index
    CfgNodeList structure;
    int entry = 0;
    int exit = 0;

    size_t call_count() const {
        size_t n = 0;
        for (const auto& b : blocks) n += b.calls.size();
        return n;
    }
};

namespace detail {

class CfgBuilder {
public:
    PlanCfg build(const PlanProgram& program) {
        cfg_ = PlanCfg{};
        int first = new_block(0, std::nullopt);
        cur_ = first;
        cfg_.entry = first;
        cfg_.structure = build_nodes(program.statements, 0, std::nullopt);
        cfg_.exit = cur_;
        return std::move(cfg_);
    }

private:
    CfgNodeList build_nodes(const StmtList& stmts, int depth,
                            std::optional<std::string> branch_tag) {
        CfgNodeList nodes;
        for (const Stmt& s : stmts) {
            if (auto* tc = std::get_if<Stmt::ToolCall>(&s.node)) {
                append_call({CallSite::Kind::Tool, tc->tool, "", tc->args, tc->bind, depth, s.span},
                            nodes, depth, branch_tag);
            } else if (auto* ae = std::get_if<Stmt::AiEval>(&s.node)) {
                append_call({CallSite::Kind::AiEval, "", ae->template_text, ae->args, ae->bind,
                             depth, s.span},
                            nodes, depth, branch_tag);
            } else if (auto* f = std::get_if<Stmt::For>(&s.node)) {
                int before = cur_;
                int body_entry = new_block(depth + 1, std::nullopt);
                link(before, body_entry);
                cur_ = body_entry;
                auto body = std::make_shared<CfgNodeList>(
                    build_nodes(*f->body, depth + 1, std::nullopt));
                int body_exit = cur_;
                link(body_exit, body_entry);  // back edge
                int after = new_block(depth, branch_tag);
                link(body_exit, after);
                link(before, after);  // zero-iteration edge
                cur_ = after;
                nodes.push_back({CfgNode::Loop{body}});
            } else if (auto* br = std::get_if<Stmt::If>(&s.node)) {
                int before = cur_;
                int then_entry = new_block(depth, "then");
                link(before, then_entry);
                cur_ = then_entry;
                auto then_nodes =
                    std::make_shared<CfgNodeList>(build_nodes(*br->then_body, depth, "then"));
                int then_exit = cur_;
                int else_entry = new_block(depth, "else");
                link(before, else_entry);
                cur_ = else_entry;
                auto else_nodes =
                    std::make_shared<CfgNodeList>(build_nodes(*br->else_body, depth, "else"));
                int else_exit = cur_;
                int join = new_block(depth, branch_tag);
                link(then_exit, join);
                link(else_exit, join);
                cur_ = join;
                nodes.push_back({CfgNode::Branch{then_nodes, else_nodes}});
            }
            // Assign / Return are pure: no call sites, no block boundary.
        }
        return nodes;
    }

    void append_call(CallSite site, CfgNodeList& nodes, int depth,
                     const std::optional<std::string>& branch_tag) {
        if (cfg_.blocks[static_cast<size_t>(cur_)].depth != depth) {
            int b = new_block(depth, branch_tag);
            link(cur_, b);
            cur_ = b;
        }
        cfg_.blocks[static_cast<size_t>(cur_)].calls.push_back(std::move(site));
        if (nodes.empty() || !std::holds_alternative<CfgNode::Calls>(nodes.back().node) ||
            std::get<CfgNode::Calls>(nodes.back().node).block_index != cur_)
            nodes.push_back({CfgNode::Calls{cur_}});
    }

    int new_block(int depth, std::optional<std::string> branch_tag) {
        cfg_.blocks.push_back({{}, depth, std::move(branch_tag)});
        cfg_.edges.emplace_back();
        return static_cast<int>(cfg_.blocks.size()) - 1;
    }

    void link(int from, int to) { cfg_.edges[static_cast<size_t>(from)].push_back(to); }

    PlanCfg cfg_;
    int cur_ = 0;
};

}  // namespace detail

inline PlanCfg build_cfg(const PlanProgram& program) {
    return detail::CfgBuilder{}.build(program);
}

}  // namespace agentjit

#endif
