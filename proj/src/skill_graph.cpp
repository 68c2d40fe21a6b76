#include "skillaudit/skill_graph.h"

#include <algorithm>
#include <sstream>

namespace skillaudit {
namespace {

bool contract_equal(const SkillEdge& a, const SkillEdge& b) {
  return a.from == b.from && a.to == b.to && a.kind == b.kind && a.contract == b.contract;
}

// A single-step node stands for program step `step` when it runs the same
// tool at the same version and agrees on every task-input binding.
bool corresponds(const SkillNode& single, const ProgStep& step) {
  if (single.program.steps.size() != 1) return false;
  const ProgStep& s = single.program.steps.front();
  if (s.tool != step.tool || s.version != step.version) return false;
  for (const auto& [param, source] : step.bindings) {
    if (!std::holds_alternative<TaskInputRef>(source)) continue;
    const auto it = s.bindings.find(param);
    if (it == s.bindings.end() || it->second != source) return false;
  }
  return true;
}

const SkillNode* find_single_for(const GraphState& state, const ProgStep& step) {
  const SkillNode* best = nullptr;
  for (const auto& [id, node] : state.nodes) {
    if (node.status != SkillStatus::kPromoted || !corresponds(node, step)) continue;
    if (best == nullptr || *node.promoted_at < *best->promoted_at) best = &node;
  }
  return best;
}

// Equal programs except that step `at` of `primary` runs `fallback_tool`.
bool is_fallback_variant(const SkillProgram& primary, const SkillProgram& other, std::size_t at,
                         const std::string& fallback_tool) {
  if (primary.steps.size() != other.steps.size()) return false;
  for (std::size_t i = 0; i < primary.steps.size(); ++i) {
    const ProgStep& p = primary.steps[i];
    const ProgStep& o = other.steps[i];
    if (p.bindings != o.bindings) return false;
    if (i == at) {
      if (o.tool != fallback_tool) return false;
    } else if (p.tool != o.tool || p.version != o.version) {
      return false;
    }
  }
  return true;
}

EvidenceBundle resolve_bundle(const std::vector<AuditEntry>& entries, const Digest& bundle_hash) {
  for (const auto& entry : entries) {
    if (entry.payload_kind != PayloadKind::kEvidence) continue;
    auto bundle = canonical_decode<EvidenceBundle>(entry.payload);
    if (bundle.bundle_hash == bundle_hash) return bundle;
  }
  throw PromotionRejected("no evidence bundle " + bundle_hash.hex() + " in the audit log");
}

void check_bundle_gate(const SkillNode& node, const Digest& bundle_hash, const EvidenceBundle& bundle) {
  std::string why;
  if (!bundle_consistent(bundle, &why)) throw PromotionRejected("evidence bundle is inconsistent: " + why);
  if (bundle.bundle_hash != bundle_hash) throw PromotionRejected("bundle hash mismatch");
  if (bundle.decision != Decision::kPass) {
    throw PromotionRejected("evidence bundle " + bundle_hash.short_hex() + " has decision FAIL");
  }
  if (bundle.skill_id != node.skill_id) throw PromotionRejected("evidence bundle is for a different skill");
}

}  // namespace

std::string_view to_string(SkillStatus s) {
  switch (s) {
    case SkillStatus::kCandidate: return "CANDIDATE";
    case SkillStatus::kPromoted: return "PROMOTED";
    case SkillStatus::kRetired: return "RETIRED";
  }
  throw std::logic_error("unhandled status");
}

std::string_view to_string(EdgeKind k) { return k == EdgeKind::kComposition ? "COMPOSITION" : "FALLBACK"; }

const SkillNode* GraphState::find(const Digest& id) const {
  const auto it = nodes.find(id);
  return it == nodes.end() ? nullptr : &it->second;
}

std::size_t GraphState::promoted_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& kv) {
    return kv.second.status == SkillStatus::kPromoted;
  }));
}

void GraphState::add_edge(const SkillEdge& edge) {
  if (find(edge.from) == nullptr || find(edge.to) == nullptr) {
    throw std::invalid_argument("edge endpoints must be graph nodes");
  }
  if (edge.kind == EdgeKind::kComposition) {
    if (edge.guard) throw std::invalid_argument("COMPOSITION edges carry no guard");
    if (edge.contract.producer_output != edge.contract.type) {
      throw std::invalid_argument("COMPOSITION contract types must match exactly");
    }
  } else {
    if (!edge.guard || !is_known_guard(*edge.guard)) {
      throw std::invalid_argument("FALLBACK edges need a registered guard predicate");
    }
  }
  for (const auto& existing : edges) {
    if (contract_equal(existing, edge)) throw std::invalid_argument("duplicate edge");
  }
  edges.push_back(edge);
}

GraphState GraphState::as_of(std::uint64_t episode) const {
  GraphState out;
  for (const auto& [id, node] : nodes) {
    if (!node.promoted_at || *node.promoted_at > episode) continue;
    SkillNode copy = node;
    if (node.retired_at && *node.retired_at <= episode) {
      copy.status = SkillStatus::kRetired;
    } else {
      copy.status = SkillStatus::kPromoted;
      copy.retired_at.reset();
    }
    out.nodes.emplace(id, std::move(copy));
  }
  for (const auto& edge : edges) {
    if (out.find(edge.from) && out.find(edge.to)) out.edges.push_back(edge);
  }
  return out;
}

std::vector<SkillNode> applicable_skills(const GraphState& graph, const TaskView& task) {
  std::vector<SkillNode> out;
  for (const auto& [id, node] : graph.nodes) {
    if (node.status != SkillStatus::kPromoted) continue;
    if (check_interface(node.interface, task).passed) out.push_back(node);
  }
  std::stable_sort(out.begin(), out.end(), [](const SkillNode& a, const SkillNode& b) {
    if (a.promoted_at != b.promoted_at) return a.promoted_at < b.promoted_at;
    return a.skill_id < b.skill_id;
  });
  return out;
}

CheckResult check_edge_contract(const SkillEdge& edge, const Value& produced, const ValueMap& inputs) {
  const std::string name = "edge:" + std::string(to_string(edge.kind));
  if (produced.type() != edge.contract.type) {
    return CheckResult::fail(name, "produced " + std::string(to_string(produced.type())) + " where contract requires " +
                                       std::string(to_string(edge.contract.type)));
  }
  if (edge.kind == EdgeKind::kFallback) {
    const bool holds = edge.guard && eval_guard(*edge.guard, inputs);
    if (!holds) return CheckResult::fail(name, "guard " + edge.guard.value_or("?") + " does not hold; fallback not permitted");
    return CheckResult{name, true, "guard " + *edge.guard + " holds; fallback permitted"};
  }
  return CheckResult::pass(name);
}

SkillGraph::SkillGraph(ToolRegistry registry, GraphState initial)
    : registry_(std::move(registry)), state_(std::make_shared<const GraphState>(std::move(initial))) {}

std::shared_ptr<const GraphState> SkillGraph::snapshot() const {
  std::lock_guard lock(publish_mu_);
  return state_;
}

void SkillGraph::publish(std::shared_ptr<const GraphState> next) {
  std::lock_guard lock(publish_mu_);
  state_ = std::move(next);
}

void SkillGraph::infer_edges(GraphState& state, const SkillNode& node) const {
  const auto output_of = [this](const ProgStep& step) {
    const ToolSchema* schema = registry_.find(step.tool);
    return schema ? schema->output_type : SemType::kInt;
  };
  // Composition: step j consuming step j-1's output.
  const auto& steps = node.program.steps;
  for (std::size_t j = 1; j < steps.size(); ++j) {
    for (const auto& [param, source] : steps[j].bindings) {
      const auto* prior = std::get_if<PriorOutputRef>(&source);
      if (prior == nullptr || prior->step_index != j - 1) continue;
      const ToolSchema* consumer = registry_.find(steps[j].tool);
      const ToolParam* p = consumer ? consumer->param(param) : nullptr;
      const SemType carried = p ? p->type : output_of(steps[j - 1]);
      EdgeContract contract{output_of(steps[j - 1]), param, carried};
      const SkillNode* producer = find_single_for(state, steps[j - 1]);
      const SkillNode* consumer_node = find_single_for(state, steps[j]);
      SkillEdge edge;
      if (producer && consumer_node) {
        edge = SkillEdge{producer->skill_id, consumer_node->skill_id, EdgeKind::kComposition, contract, std::nullopt};
      }
      const bool exists = producer && consumer_node &&
                          std::any_of(state.edges.begin(), state.edges.end(),
                                      [&](const SkillEdge& e) { return contract_equal(e, edge); });
      if (producer && consumer_node && contract.producer_output == contract.type) {
        if (!exists) state.add_edge(edge);
      } else {
        state.nodes.at(node.skill_id).internal_contracts.push_back(contract);
      }
    }
  }
  // Guarded fallback between a program and its fallback-tool variant, in
  // whichever order the two were promoted.
  const auto link = [&](const SkillNode& primary, const SkillNode& alternative) {
    for (std::size_t i = 0; i < primary.program.steps.size(); ++i) {
      const ToolSchema* schema = registry_.find(primary.program.steps[i].tool);
      if (!schema || !schema->fallback) continue;
      if (!is_fallback_variant(primary.program, alternative.program, i, schema->fallback->tool)) continue;
      SkillEdge edge{primary.skill_id, alternative.skill_id, EdgeKind::kFallback,
                     EdgeContract{primary.interface.output_type, "*", alternative.interface.output_type},
                     schema->fallback->guard};
      const bool exists = std::any_of(state.edges.begin(), state.edges.end(),
                                      [&](const SkillEdge& e) { return contract_equal(e, edge); });
      if (!exists) state.add_edge(edge);
    }
  };
  for (const auto& [id, other] : state.nodes) {
    if (id == node.skill_id || other.status != SkillStatus::kPromoted) continue;
    link(node, other);
    link(other, node);
  }
}

GraphState SkillGraph::with_promotion(const GraphState& base, SkillNode node, const Digest& bundle_hash,
                                      const EvidenceBundle& bundle, std::uint64_t episode) const {
  GraphState next = base;
  node.status = SkillStatus::kPromoted;
  node.evidence_ref = bundle_hash;
  node.promoted_at = episode;
  node.retired_at.reset();
  node.internal_contracts.clear();
  (void)bundle;
  const Digest id = node.skill_id;
  next.nodes.emplace(id, std::move(node));
  infer_edges(next, next.nodes.at(id));
  return next;
}

SkillNode SkillGraph::promote(SkillNode node, const Digest& bundle_hash, std::uint64_t episode, AuditLog& log) {
  std::lock_guard writer(writer_mu_);
  const auto current = snapshot();
  if (const SkillNode* existing = current->find(node.skill_id)) return *existing;
  if (node.status != SkillStatus::kCandidate) throw PromotionRejected("only CANDIDATE nodes can be promoted");
  try {
    if (skill_hash(node.program) != node.skill_id) throw PromotionRejected("skill_id is not the program hash");
  } catch (const std::invalid_argument& e) {
    throw PromotionRejected(std::string("ill-formed program: ") + e.what());
  }
  const auto entry = log.find_evidence(bundle_hash);
  if (!entry) throw PromotionRejected("no evidence bundle " + bundle_hash.hex() + " in the audit log");
  const auto bundle = canonical_decode<EvidenceBundle>(entry->payload);
  check_bundle_gate(node, bundle_hash, bundle);

  auto next = std::make_shared<const GraphState>(with_promotion(*current, node, bundle_hash, bundle, episode));
  log.append(PayloadKind::kPromotion, canonical_encode(PromotionRecord{node.skill_id, bundle_hash, episode}));
  publish(next);
  return next->nodes.at(node.skill_id);
}

void SkillGraph::retire(const Digest& skill_id, const std::string& reason, std::uint64_t episode, AuditLog& log) {
  std::lock_guard writer(writer_mu_);
  const auto current = snapshot();
  const SkillNode* node = current->find(skill_id);
  if (node == nullptr) throw UnknownSkill("unknown skill " + skill_id.hex());
  if (node->status != SkillStatus::kPromoted) throw UnknownSkill("skill " + skill_id.short_hex() + " is not PROMOTED");
  GraphState next = *current;
  next.nodes.at(skill_id).status = SkillStatus::kRetired;
  next.nodes.at(skill_id).retired_at = episode;
  log.append(PayloadKind::kRetirement, canonical_encode(RetirementRecord{skill_id, reason, episode}));
  publish(std::make_shared<const GraphState>(std::move(next)));
}

GraphState SkillGraph::rebuild(const std::vector<AuditEntry>& entries, ToolRegistry registry) {
  SkillGraph graph(std::move(registry));
  GraphState state;
  for (const auto& entry : entries) {
    if (entry.payload_kind == PayloadKind::kPromotion) {
      const auto rec = canonical_decode<PromotionRecord>(entry.payload);
      if (state.find(rec.skill_id)) continue;
      const EvidenceBundle bundle = resolve_bundle(entries, rec.bundle_hash);
      SkillNode node;
      node.skill_id = rec.skill_id;
      node.program = bundle.program;
      node.interface = bundle.interface;
      check_bundle_gate(node, rec.bundle_hash, bundle);
      state = graph.with_promotion(state, std::move(node), rec.bundle_hash, bundle, rec.episode);
    } else if (entry.payload_kind == PayloadKind::kRetirement) {
      const auto rec = canonical_decode<RetirementRecord>(entry.payload);
      auto it = state.nodes.find(rec.skill_id);
      if (it == state.nodes.end() || it->second.status != SkillStatus::kPromoted) {
        throw UnknownSkill("retirement of unknown skill " + rec.skill_id.hex());
      }
      it->second.status = SkillStatus::kRetired;
      it->second.retired_at = rec.episode;
    }
  }
  return state;
}

std::optional<std::string> check_gate_soundness(const GraphState& graph, const std::vector<AuditEntry>& entries) {
  for (const auto& [id, node] : graph.nodes) {
    if (node.status != SkillStatus::kPromoted) continue;
    if (!node.evidence_ref) return "node " + id.short_hex() + " has no evidence_ref";
    try {
      const EvidenceBundle bundle = resolve_bundle(entries, *node.evidence_ref);
      check_bundle_gate(node, *node.evidence_ref, bundle);
    } catch (const std::exception& e) {
      return "node " + id.short_hex() + ": " + e.what();
    }
  }
  return std::nullopt;
}

std::string export_canonical(const GraphState& graph) { return canonical_encode(graph); }

std::string export_dot(const GraphState& graph) {
  std::ostringstream out;
  out << "digraph skills {\n  node [shape=box];\n";
  for (const auto& [id, node] : graph.nodes) {
    std::string label;
    for (const auto& step : node.program.steps) label += (label.empty() ? "" : " -> ") + step.tool;
    std::string kinds;
    for (const auto kind : node.interface.applicable_kinds) kinds += (kinds.empty() ? "" : ",") + std::string(to_string(kind));
    out << "  \"" << id.short_hex() << "\" [label=\"" << label << "\\n" << kinds << "\\n" << to_string(node.status)
        << "\"";
    if (node.status == SkillStatus::kRetired) out << ", style=dashed";
    out << "];\n";
  }
  for (const auto& edge : graph.edges) {
    out << "  \"" << edge.from.short_hex() << "\" -> \"" << edge.to.short_hex() << "\" [label=\"";
    if (edge.kind == EdgeKind::kComposition) {
      out << edge.contract.consumer_input << ":" << to_string(edge.contract.type) << "\"";
    } else {
      out << "guard " << edge.guard.value_or("") << "\", style=dashed";
    }
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

// ---- codecs ----

Json to_canon(SkillStatus s) { return Json(std::string(to_string(s))); }

void from_canon(const Json& j, SkillStatus& out) {
  const std::string name = decode_string(j);
  for (const auto s : {SkillStatus::kCandidate, SkillStatus::kPromoted, SkillStatus::kRetired}) {
    if (to_string(s) == name) {
      out = s;
      return;
    }
  }
  throw DecodeError("", "unknown skill status '" + name + "'");
}

Json to_canon(EdgeKind k) { return Json(std::string(to_string(k))); }

void from_canon(const Json& j, EdgeKind& out) {
  const std::string name = decode_string(j);
  if (name == "COMPOSITION") out = EdgeKind::kComposition;
  else if (name == "FALLBACK") out = EdgeKind::kFallback;
  else throw DecodeError("", "unknown edge kind '" + name + "'");
}

Json to_canon(const EdgeContract& c) {
  Json j = Json::object();
  j["producer_output"] = to_canon(c.producer_output);
  j["consumer_input"] = c.consumer_input;
  j["type"] = to_canon(c.type);
  return j;
}

void from_canon(const Json& j, EdgeContract& out) {
  read_field(j, "producer_output", out.producer_output);
  read_field(j, "consumer_input", out.consumer_input);
  read_field(j, "type", out.type);
}

Json to_canon(const SkillNode& n) {
  Json j = Json::object();
  j["skill_id"] = to_canon(n.skill_id);
  j["program"] = to_canon(n.program);
  j["interface"] = to_canon(n.interface);
  j["status"] = to_canon(n.status);
  j["evidence_ref"] = to_canon(n.evidence_ref);
  j["promoted_at"] = to_canon(n.promoted_at);
  j["retired_at"] = to_canon(n.retired_at);
  j["internal_contracts"] = to_canon(n.internal_contracts);
  return j;
}

void from_canon(const Json& j, SkillNode& out) {
  read_field(j, "skill_id", out.skill_id);
  read_field(j, "program", out.program);
  read_field(j, "interface", out.interface);
  read_field(j, "status", out.status);
  read_field(j, "evidence_ref", out.evidence_ref);
  read_field(j, "promoted_at", out.promoted_at);
  read_field(j, "retired_at", out.retired_at);
  read_field(j, "internal_contracts", out.internal_contracts);
}

Json to_canon(const SkillEdge& e) {
  Json j = Json::object();
  j["from"] = to_canon(e.from);
  j["to"] = to_canon(e.to);
  j["edge_kind"] = to_canon(e.kind);
  j["contract"] = to_canon(e.contract);
  j["guard"] = to_canon(e.guard);
  return j;
}

void from_canon(const Json& j, SkillEdge& out) {
  read_field(j, "from", out.from);
  read_field(j, "to", out.to);
  read_field(j, "edge_kind", out.kind);
  read_field(j, "contract", out.contract);
  read_field(j, "guard", out.guard);
}

Json to_canon(const GraphState& g) {
  Json j = Json::object();
  Json nodes = Json::array();
  for (const auto& [id, node] : g.nodes) nodes.push_back(to_canon(node));
  j["nodes"] = std::move(nodes);
  j["edges"] = to_canon(g.edges);
  return j;
}

void from_canon(const Json& j, GraphState& out) {
  std::vector<SkillNode> nodes;
  read_field(j, "nodes", nodes);
  out.nodes.clear();
  for (auto& node : nodes) {
    const Digest id = node.skill_id;
    out.nodes.emplace(id, std::move(node));
  }
  read_field(j, "edges", out.edges);
}

Json to_canon(const PromotionRecord& r) {
  Json j = Json::object();
  j["skill_id"] = to_canon(r.skill_id);
  j["bundle_hash"] = to_canon(r.bundle_hash);
  j["episode"] = r.episode;
  return j;
}

void from_canon(const Json& j, PromotionRecord& out) {
  read_field(j, "skill_id", out.skill_id);
  read_field(j, "bundle_hash", out.bundle_hash);
  read_field(j, "episode", out.episode);
}

Json to_canon(const RetirementRecord& r) {
  Json j = Json::object();
  j["skill_id"] = to_canon(r.skill_id);
  j["reason"] = r.reason;
  j["episode"] = r.episode;
  return j;
}

void from_canon(const Json& j, RetirementRecord& out) {
  read_field(j, "skill_id", out.skill_id);
  read_field(j, "reason", out.reason);
  read_field(j, "episode", out.episode);
}

}  // namespace skillaudit
