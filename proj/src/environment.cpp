#include "skillaudit/environment.h"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace skillaudit {
namespace {

constexpr std::int64_t kIntLo = -99;
constexpr std::int64_t kIntHi = 99;
constexpr std::array<std::int64_t, 5> kIntBoundary = {-99, -1, 0, 1, 99};

struct KindInfo {
  TaskKind kind;
  std::string_view name;
  KindSchema schema;
};

const std::vector<KindInfo>& kind_table() {
  static const std::vector<KindInfo> table = {
      {TaskKind::kSum, "SUM", {{{"a", SemType::kInt}, {"b", SemType::kInt}}, SemType::kInt}},
      {TaskKind::kProduct, "PRODUCT", {{{"a", SemType::kInt}, {"b", SemType::kInt}}, SemType::kInt}},
      {TaskKind::kReverse, "REVERSE", {{{"s", SemType::kStr}}, SemType::kStr}},
      {TaskKind::kShout, "SHOUT", {{{"s", SemType::kStr}}, SemType::kStr}},
      {TaskKind::kSumReport, "SUM_REPORT", {{{"a", SemType::kInt}, {"b", SemType::kInt}}, SemType::kStr}},
      {TaskKind::kJoinLoud, "JOIN_LOUD", {{{"a", SemType::kStr}, {"b", SemType::kStr}}, SemType::kStr}},
  };
  return table;
}

const KindInfo& info(TaskKind kind) {
  return kind_table().at(static_cast<std::size_t>(kind));
}

// Reverses code points so multi-byte characters stay intact.
std::string reverse_utf8(const std::string& s) {
  std::vector<std::string> chars;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len = 1;
    const auto lead = static_cast<unsigned char>(s[i]);
    if ((lead & 0xE0) == 0xC0) len = 2;
    else if ((lead & 0xF0) == 0xE0) len = 3;
    else if ((lead & 0xF8) == 0xF0) len = 4;
    chars.push_back(s.substr(i, len));
    i += len;
  }
  std::string out;
  out.reserve(s.size());
  for (auto it = chars.rbegin(); it != chars.rend(); ++it) out += *it;
  return out;
}

std::string upper_ascii(std::string s) {
  for (char& c : s) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return s;
}

Outcome checked_int(std::int64_t v) {
  if (v > kMaxIntMagnitude || v < -kMaxIntMagnitude) {
    return ToolError{ErrorKind::kOutOfRange, "result " + std::to_string(v) + " exceeds integer bound"};
  }
  return Value::integer(v);
}

Outcome checked_str(std::string s) {
  if (s.size() > kMaxStrBytes) {
    return ToolError{ErrorKind::kOutOfRange, "result exceeds string length bound"};
  }
  return Value::string(std::move(s));
}

Outcome tool_add(const ValueMap& args) {
  return checked_int(args.at("a").as_int() + args.at("b").as_int());
}
Outcome tool_mul(const ValueMap& args) {
  return checked_int(args.at("a").as_int() * args.at("b").as_int());
}
Outcome tool_rev(const ValueMap& args) { return checked_str(reverse_utf8(args.at("s").as_str())); }
Outcome tool_upper(const ValueMap& args) { return checked_str(upper_ascii(args.at("s").as_str())); }
Outcome tool_concat(const ValueMap& args) {
  return checked_str(args.at("a").as_str() + args.at("b").as_str());
}
Outcome tool_fmt(const ValueMap& args) { return checked_str(std::to_string(args.at("n").as_int())); }

std::string random_lower(Draw& draw, std::size_t len) {
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += static_cast<char>('a' + draw.index_below(26));
  return s;
}

std::string task_id(const std::string& path, std::uint64_t index) {
  return path + "#" + std::to_string(index);
}

Task finish_task(const TaskRef& ref, ValueMap inputs) {
  Task task;
  task.id = task_id(ref.path, ref.index);
  task.kind = ref.kind;
  task.ground_truth = truth_fn(ref.kind, inputs);
  task.inputs = std::move(inputs);
  task.episode_index = ref.index;
  task.ref = ref;
  return task;
}

Task random_task(const TaskRef& ref) {
  Draw draw(ref.seed, ref.path, ref.index);
  ValueMap inputs;
  for (const auto& [key, type] : kind_schema(ref.kind).inputs) {
    if (type == SemType::kInt) {
      inputs.emplace(key, Value::integer(draw.uniform_int(kIntLo, kIntHi)));
    } else {
      const auto len = static_cast<std::size_t>(draw.uniform_int(1, 8));
      inputs.emplace(key, Value::string(random_lower(draw, len)));
    }
  }
  return finish_task(ref, std::move(inputs));
}

// Diagonal boundary pairs first, then the remaining pairs in a seeded order.
std::vector<std::pair<std::int64_t, std::int64_t>> boundary_pairs(std::uint64_t seed, const std::string& path) {
  std::vector<std::pair<std::int64_t, std::int64_t>> diagonal;
  std::vector<std::pair<std::int64_t, std::int64_t>> rest;
  for (const auto a : kIntBoundary) {
    for (const auto b : kIntBoundary) {
      (a == b ? diagonal : rest).emplace_back(a, b);
    }
  }
  Draw order(seed, path + "/order", 0);
  for (std::size_t i = rest.size(); i > 1; --i) {
    std::swap(rest[i - 1], rest[order.index_below(i)]);
  }
  diagonal.insert(diagonal.end(), rest.begin(), rest.end());
  return diagonal;
}

std::string boundary_string(Draw& draw, std::size_t shape) {
  switch (shape % 3) {
    case 0:
      return random_lower(draw, 1);
    case 1:
      return random_lower(draw, 8);
    default:
      return std::string(8, static_cast<char>('a' + draw.index_below(26)));
  }
}

Task boundary_task(const TaskRef& ref) {
  const KindSchema& schema = kind_schema(ref.kind);
  ValueMap inputs;
  if (schema.inputs.begin()->second == SemType::kInt) {
    const auto pairs = boundary_pairs(ref.seed, ref.path);
    const auto& [a, b] = pairs[ref.index % pairs.size()];
    inputs.emplace("a", Value::integer(a));
    inputs.emplace("b", Value::integer(b));
  } else {
    Draw draw(ref.seed, ref.path, ref.index);
    std::size_t shape = ref.index;
    for (const auto& [key, type] : schema.inputs) {
      inputs.emplace(key, Value::string(boundary_string(draw, shape)));
      shape /= 3;
    }
  }
  return finish_task(ref, std::move(inputs));
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

std::string_view to_string(TaskKind kind) { return info(kind).name; }

TaskKind task_kind_from_string(std::string_view name) {
  for (const auto& entry : kind_table()) {
    if (entry.name == name) return entry.kind;
  }
  throw std::invalid_argument("unknown task kind '" + std::string(name) + "'");
}

const std::vector<TaskKind>& all_task_kinds() {
  static const std::vector<TaskKind> kinds = {TaskKind::kSum,     TaskKind::kProduct,   TaskKind::kReverse,
                                              TaskKind::kShout,   TaskKind::kSumReport, TaskKind::kJoinLoud};
  return kinds;
}

bool is_composite_kind(TaskKind kind) {
  return kind == TaskKind::kSumReport || kind == TaskKind::kJoinLoud;
}

const KindSchema& kind_schema(TaskKind kind) { return info(kind).schema; }

Value truth_fn(TaskKind kind, const ValueMap& inputs) {
  switch (kind) {
    case TaskKind::kSum:
      return Value::integer(inputs.at("a").as_int() + inputs.at("b").as_int());
    case TaskKind::kProduct:
      return Value::integer(inputs.at("a").as_int() * inputs.at("b").as_int());
    case TaskKind::kReverse:
      return Value::string(reverse_utf8(inputs.at("s").as_str()));
    case TaskKind::kShout:
      return Value::string(upper_ascii(inputs.at("s").as_str()));
    case TaskKind::kSumReport:
      return Value::string(std::to_string(inputs.at("a").as_int() + inputs.at("b").as_int()));
    case TaskKind::kJoinLoud:
      return Value::string(upper_ascii(inputs.at("a").as_str() + inputs.at("b").as_str()));
  }
  throw std::logic_error("unhandled task kind");
}

bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnknownTool: return "UNKNOWN_TOOL";
    case ErrorKind::kSchemaViolation: return "SCHEMA_VIOLATION";
    case ErrorKind::kDomainGuard: return "DOMAIN_GUARD";
    case ErrorKind::kOutOfRange: return "OUT_OF_RANGE";
    case ErrorKind::kVersionMismatch: return "VERSION_MISMATCH";
    case ErrorKind::kPrecondition: return "PRECONDITION";
    case ErrorKind::kPostcondition: return "POSTCONDITION";
    case ErrorKind::kContract: return "CONTRACT";
    case ErrorKind::kUnknownSkill: return "UNKNOWN_SKILL";
    case ErrorKind::kMissingBinding: return "MISSING_BINDING";
    case ErrorKind::kStepLimit: return "STEP_LIMIT";
  }
  throw std::logic_error("unhandled error kind");
}

const ToolParam* ToolSchema::param(std::string_view param_name) const {
  for (const auto& p : params) {
    if (p.name == param_name) return &p;
  }
  return nullptr;
}

bool is_known_guard(std::string_view name) {
  return name == "non_negative_operands" || name == "operand_negative";
}

bool eval_guard(std::string_view name, const ValueMap& values) {
  const auto any_negative = std::any_of(values.begin(), values.end(), [](const auto& kv) {
    return kv.second.is_int() && kv.second.as_int() < 0;
  });
  if (name == "non_negative_operands") return !any_negative;
  if (name == "operand_negative") return any_negative;
  throw std::invalid_argument("unknown guard predicate '" + std::string(name) + "'");
}

ToolRegistry ToolRegistry::standard() {
  ToolRegistry reg;
  const auto add = [&reg](ToolSchema schema, Impl impl) {
    const std::string name = schema.name;
    reg.entries_.emplace(name, Entry{std::move(schema), impl});
  };
  const ToolParam a_int{"a", SemType::kInt};
  const ToolParam b_int{"b", SemType::kInt};
  add({"add", "1.0", {a_int, b_int}, SemType::kInt, std::nullopt, std::nullopt}, &tool_add);
  add({"mul", "1.0", {a_int, b_int}, SemType::kInt, std::nullopt, std::nullopt}, &tool_mul);
  add({"fast_add", "1.0", {a_int, b_int}, SemType::kInt, "non_negative_operands",
       FallbackRule{"operand_negative", "add"}},
      &tool_add);
  add({"rev", "1.0", {{"s", SemType::kStr}}, SemType::kStr, std::nullopt, std::nullopt}, &tool_rev);
  add({"upper", "1.0", {{"s", SemType::kStr}}, SemType::kStr, std::nullopt, std::nullopt}, &tool_upper);
  add({"concat", "1.0", {{"a", SemType::kStr}, {"b", SemType::kStr}}, SemType::kStr, std::nullopt, std::nullopt},
      &tool_concat);
  add({"fmt", "1.0", {{"n", SemType::kInt}}, SemType::kStr, std::nullopt, std::nullopt}, &tool_fmt);
  return reg;
}

const ToolSchema* ToolRegistry::find(std::string_view name) const {
  const auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second.schema;
}

std::vector<const ToolSchema*> ToolRegistry::schemas() const {
  std::vector<const ToolSchema*> out;
  for (const auto& [name, entry] : entries_) out.push_back(&entry.schema);
  return out;
}

std::map<std::string, std::string> ToolRegistry::versions() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, entry] : entries_) out.emplace(name, entry.schema.version);
  return out;
}

ToolRegistry ToolRegistry::with_version(const std::string& tool, std::string version) const {
  ToolRegistry copy = *this;
  const auto it = copy.entries_.find(tool);
  if (it == copy.entries_.end()) throw std::invalid_argument("unknown tool '" + tool + "'");
  if (version.empty()) throw std::invalid_argument("tool version must be non-empty");
  it->second.schema.version = std::move(version);
  return copy;
}

Outcome ToolRegistry::invoke(std::string_view name, const ValueMap& args) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) {
    return ToolError{ErrorKind::kUnknownTool, "unknown tool '" + std::string(name) + "'"};
  }
  const auto checks = validate_args(it->second.schema, args);
  for (const auto& check : checks) {
    if (check.passed) continue;
    const bool guard = it->second.schema.domain_guard && check.check_name == "guard:" + *it->second.schema.domain_guard;
    return ToolError{guard ? ErrorKind::kDomainGuard : ErrorKind::kSchemaViolation, check.detail};
  }
  return it->second.impl(args);
}

std::vector<CheckResult> validate_args(const ToolSchema& schema, const ValueMap& args) {
  std::vector<CheckResult> checks;
  bool typed = true;
  for (const auto& p : schema.params) {
    const std::string name = "param:" + p.name;
    const auto it = args.find(p.name);
    if (it == args.end()) {
      checks.push_back(CheckResult::fail(name, "missing parameter '" + p.name + "' of " + schema.name));
      typed = false;
    } else if (it->second.type() != p.type) {
      checks.push_back(CheckResult::fail(name, "parameter '" + p.name + "' of " + schema.name + " expects " +
                                                   std::string(to_string(p.type)) + ", got " +
                                                   std::string(to_string(it->second.type()))));
      typed = false;
    } else {
      checks.push_back(CheckResult::pass(name));
    }
  }
  std::string extras;
  for (const auto& [key, value] : args) {
    if (schema.param(key) == nullptr) extras += (extras.empty() ? "" : ",") + key;
  }
  checks.push_back(extras.empty() ? CheckResult::pass("no_extra_args")
                                  : CheckResult::fail("no_extra_args", "unexpected arguments: " + extras));
  if (schema.domain_guard) {
    const std::string name = "guard:" + *schema.domain_guard;
    if (!typed) {
      checks.push_back(CheckResult::fail(name, "guard not evaluated: arguments ill-typed"));
    } else if (eval_guard(*schema.domain_guard, args)) {
      checks.push_back(CheckResult::pass(name));
    } else {
      checks.push_back(CheckResult::fail(name, schema.name + " requires " + *schema.domain_guard));
    }
  }
  return checks;
}

Outcome invoke_tool(const ToolRegistry& registry, std::string_view name, const ValueMap& args) {
  return registry.invoke(name, args);
}

VersionStamp Environment::version_stamp() const {
  return VersionStamp{std::string(kVerifierVersion), std::string(kHarnessVersion), tools_.versions()};
}

Task gen_task(TaskKind kind, const RandomStream& stream, std::uint64_t draw_index) {
  return make_task(TaskRef{kind, stream.seed(), stream.path(), draw_index});
}

Task make_task(const TaskRef& ref) {
  return starts_with(ref.path, "perturb/") ? boundary_task(ref) : random_task(ref);
}

std::string holdout_path(TaskKind kind, std::uint64_t seed) {
  return "holdout/" + std::string(to_string(kind)) + "/" + std::to_string(seed);
}

std::string perturb_path(TaskKind kind, std::uint64_t seed) {
  return "perturb/" + std::string(to_string(kind)) + "/" + std::to_string(seed);
}

std::vector<Task> holdout_suite(TaskKind kind, std::uint64_t seed, std::size_t n) {
  if (n == 0) throw std::invalid_argument("holdout suite size must be at least 1");
  std::vector<Task> out;
  const std::string path = holdout_path(kind, seed);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_task(TaskRef{kind, seed, path, i}));
  return out;
}

std::vector<Task> perturb_suite(TaskKind kind, std::uint64_t seed, std::size_t n) {
  if (n == 0) throw std::invalid_argument("perturbation suite size must be at least 1");
  std::vector<Task> out;
  const std::string path = perturb_path(kind, seed);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_task(TaskRef{kind, seed, path, i}));
  return out;
}

bool verify_outcome(const Task& task, const Value& answer) { return answer == task.ground_truth; }

// ---- codecs ----

Json to_canon(TaskKind kind) { return Json(std::string(to_string(kind))); }

void from_canon(const Json& j, TaskKind& out) {
  try {
    out = task_kind_from_string(decode_string(j));
  } catch (const std::invalid_argument& e) {
    throw DecodeError("", e.what());
  }
}

Json to_canon(const TaskRef& ref) {
  Json j = Json::object();
  j["kind"] = to_canon(ref.kind);
  j["seed"] = ref.seed;
  j["path"] = ref.path;
  j["index"] = ref.index;
  return j;
}

void from_canon(const Json& j, TaskRef& out) {
  read_field(j, "kind", out.kind);
  read_field(j, "seed", out.seed);
  read_field(j, "path", out.path);
  read_field(j, "index", out.index);
}

Json to_canon(const TaskView& view) {
  Json j = Json::object();
  j["id"] = view.id;
  j["kind"] = to_canon(view.kind);
  j["inputs"] = to_canon(view.inputs);
  j["episode_index"] = view.episode_index;
  return j;
}

void from_canon(const Json& j, TaskView& out) {
  read_field(j, "id", out.id);
  read_field(j, "kind", out.kind);
  read_field(j, "inputs", out.inputs);
  read_field(j, "episode_index", out.episode_index);
}

Json to_canon(const Task& task) {
  Json j = Json::object();
  j["id"] = task.id;
  j["kind"] = to_canon(task.kind);
  j["inputs"] = to_canon(task.inputs);
  j["ground_truth"] = to_canon(task.ground_truth);
  j["episode_index"] = task.episode_index;
  j["ref"] = to_canon(task.ref);
  return j;
}

void from_canon(const Json& j, Task& out) {
  read_field(j, "id", out.id);
  read_field(j, "kind", out.kind);
  read_field(j, "inputs", out.inputs);
  read_field(j, "ground_truth", out.ground_truth);
  read_field(j, "episode_index", out.episode_index);
  read_field(j, "ref", out.ref);
}

Json to_canon(const CheckResult& check) {
  Json j = Json::object();
  j["check_name"] = check.check_name;
  j["passed"] = check.passed;
  j["detail"] = check.detail;
  return j;
}

void from_canon(const Json& j, CheckResult& out) {
  read_field(j, "check_name", out.check_name);
  read_field(j, "passed", out.passed);
  read_field(j, "detail", out.detail);
}

Json to_canon(ErrorKind kind) { return Json(std::string(to_string(kind))); }

void from_canon(const Json& j, ErrorKind& out) {
  const std::string name = decode_string(j);
  for (int k = 0; k <= static_cast<int>(ErrorKind::kStepLimit); ++k) {
    if (to_string(static_cast<ErrorKind>(k)) == name) {
      out = static_cast<ErrorKind>(k);
      return;
    }
  }
  throw DecodeError("", "unknown error kind '" + name + "'");
}

Json to_canon(const ToolError& error) {
  Json j = Json::object();
  j["kind"] = to_canon(error.kind);
  j["message"] = error.message;
  return j;
}

void from_canon(const Json& j, ToolError& out) {
  read_field(j, "kind", out.kind);
  read_field(j, "message", out.message);
}

Json to_canon(const Outcome& outcome) {
  Json j = Json::object();
  if (const auto* v = std::get_if<Value>(&outcome)) {
    j["ok"] = to_canon(*v);
  } else {
    j["error"] = to_canon(std::get<ToolError>(outcome));
  }
  return j;
}

void from_canon(const Json& j, Outcome& out) {
  if (!j.is_object() || j.size() != 1) throw DecodeError("", "expected outcome");
  if (j.contains("ok")) {
    out = read_field<Value>(j, "ok");
  } else {
    out = read_field<ToolError>(j, "error");
  }
}

Json to_canon(const ToolParam& param) {
  Json j = Json::object();
  j["name"] = param.name;
  j["type"] = to_canon(param.type);
  return j;
}

void from_canon(const Json& j, ToolParam& out) {
  read_field(j, "name", out.name);
  read_field(j, "type", out.type);
}

Json to_canon(const FallbackRule& rule) {
  Json j = Json::object();
  j["guard"] = rule.guard;
  j["tool"] = rule.tool;
  return j;
}

void from_canon(const Json& j, FallbackRule& out) {
  read_field(j, "guard", out.guard);
  read_field(j, "tool", out.tool);
}

Json to_canon(const ToolSchema& schema) {
  Json j = Json::object();
  j["name"] = schema.name;
  j["version"] = schema.version;
  j["params"] = to_canon(schema.params);
  j["output_type"] = to_canon(schema.output_type);
  j["domain_guard"] = to_canon(schema.domain_guard);
  j["fallback"] = to_canon(schema.fallback);
  return j;
}

void from_canon(const Json& j, ToolSchema& out) {
  read_field(j, "name", out.name);
  read_field(j, "version", out.version);
  read_field(j, "params", out.params);
  read_field(j, "output_type", out.output_type);
  read_field(j, "domain_guard", out.domain_guard);
  read_field(j, "fallback", out.fallback);
}

Json to_canon(const VersionStamp& stamp) {
  Json j = Json::object();
  j["verifier_version"] = stamp.verifier_version;
  j["harness_version"] = stamp.harness_version;
  j["tool_schema_versions"] = to_canon(stamp.tool_schema_versions);
  return j;
}

void from_canon(const Json& j, VersionStamp& out) {
  read_field(j, "verifier_version", out.verifier_version);
  read_field(j, "harness_version", out.harness_version);
  read_field(j, "tool_schema_versions", out.tool_schema_versions);
}

}  // namespace skillaudit
