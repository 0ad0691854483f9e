#include "explorebot/engine.hpp"

#include <algorithm>
#include <sstream>

#include "explorebot/text.hpp"

namespace explorebot {

EngineContext::EngineContext(EngineConfig cfg, Manual man, std::shared_ptr<const Catalog> cat)
    : config(std::move(cfg)), manual(std::move(man)), catalog(std::move(cat)) {
  if (!catalog) catalog = std::make_shared<const Catalog>();
  config.reminders.validate();
  config.suggestions.validate();
}

std::string_view to_string(FlowKind kind) noexcept {
  switch (kind) {
    case FlowKind::charter: return "charter";
    case FlowKind::report: return "report";
    case FlowKind::start: return "start";
    case FlowKind::help: return "help";
  }
  return "";
}

std::string_view to_string(FlowStep step) noexcept {
  switch (step) {
    case FlowStep::charter_name: return "name";
    case FlowStep::charter_app: return "app_name";
    case FlowStep::charter_goals: return "goals";
    case FlowStep::charter_attachments: return "attachments";
    case FlowStep::report_charter: return "charter";
    case FlowStep::report_type: return "type";
    case FlowStep::report_description: return "description";
    case FlowStep::report_attachments: return "attachments";
    case FlowStep::start_duration: return "duration";
    case FlowStep::help_topic: return "topic";
  }
  return "";
}

std::string_view to_string(ReportType type) noexcept { return type == ReportType::bug ? "bug" : "issue"; }

std::optional<ReportType> report_type_from_string(std::string_view s) noexcept {
  const auto t = text::trim(s);
  if (text::iequals(t, "bug")) return ReportType::bug;
  if (text::iequals(t, "issue")) return ReportType::issue;
  return std::nullopt;
}

const Charter* EngineState::find_charter(CharterId id) const noexcept {
  auto it = std::find_if(charters.begin(), charters.end(), [&](const Charter& c) { return c.id == id; });
  return it == charters.end() ? nullptr : &*it;
}

const Charter* EngineState::find_charter_by_name(std::string_view name) const noexcept {
  auto it = std::find_if(charters.begin(), charters.end(), [&](const Charter& c) { return c.name == name; });
  return it == charters.end() ? nullptr : &*it;
}

std::string introduction_text(const EngineConfig& config) {
  return "Hello! I am " + config.bot_name +
         ", your assistant for exploratory testing sessions. Messages meant for me start with '?'. "
         "Register a charter with ?charter, start a timed session with ?start and report what you find with "
         "?report. Type ?commands to see everything I understand or ?manual for the step-by-step procedure.";
}

namespace {

template <typename Tag>
Id<Tag> make_id(const ChannelId& channel, std::string_view kind, std::uint64_t n) {
  return Id<Tag>(channel.str() + ":" + std::string(kind) + "-" + std::to_string(n));
}

OutboundAction make_action(ActionKind kind, const EngineState& state, std::string message) {
  OutboundAction a;
  a.kind = kind;
  a.channel = state.channel;
  a.text = std::move(message);
  return a;
}

OutboundAction reply(const EngineState& state, std::string message) {
  return make_action(ActionKind::reply, state, std::move(message));
}

OutboundAction prompt(const ChannelId& channel, const FlowState& flow, std::string message) {
  OutboundAction a;
  a.kind = ActionKind::prompt;
  a.channel = channel;
  a.text = std::move(message);
  a.flow = flow.id;
  return a;
}

std::string charter_names(const EngineState& state) {
  std::string out;
  for (const auto& c : state.charters) {
    if (!out.empty()) out += ", ";
    out += "'" + c.name + "'";
  }
  return out;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ", ";
    out += p;
  }
  return out;
}

std::string attachments_prompt(std::size_t count) {
  if (count == 0) return "Attach screenshots or other files if you have any, then type 'done' (or just 'done' to skip).";
  return "Got " + std::to_string(count) + " attachment(s). Send more or type 'done' to finish.";
}

bool is_keyword(std::string_view input, std::string_view keyword) {
  return text::iequals(text::trim(input), keyword);
}

// Prompts ------------------------------------------------------------------

std::string first_prompt(FlowKind kind, const EngineState& state, const Catalog& catalog) {
  switch (kind) {
    case FlowKind::charter:
      return "Let's register a charter. What is the charter name? (type 'cancel' to abort)";
    case FlowKind::report:
      return "Which charter is this report about? Registered charters: " + charter_names(state) + ".";
    case FlowKind::start:
      return "What is the time limit for this session, in minutes?";
    case FlowKind::help:
      return list_topics(catalog) + "\nType one of the keys above to learn more, or 'cancel'.";
  }
  return "";
}

// Flow steps -----------------------------------------------------------------

FlowAdvance stay(const EngineState& ctx, FlowState flow, std::string message) {
  auto action = prompt(ctx.channel, flow, std::move(message));
  return {std::move(flow), std::move(action)};
}

FlowAdvance next_step(const EngineState& ctx, FlowState flow, FlowStep step, std::string message) {
  flow.step = step;
  return stay(ctx, std::move(flow), std::move(message));
}

FlowAdvance attachments_step(const EngineState& ctx, FlowState flow, const FlowInput& input) {
  if (is_keyword(input.text, kFinishKeyword)) return {FlowResult{std::move(flow)}, std::nullopt};
  if (input.attachments.empty()) {
    return stay(ctx, std::move(flow), "Please send an attachment or type 'done' to finish.");
  }
  const auto count = flow.attachments.size();
  return stay(ctx, std::move(flow), attachments_prompt(count));
}

FlowAdvance advance_charter(FlowState flow, const FlowInput& input, const EngineState& ctx) {
  const std::string value(text::trim(input.text));
  switch (flow.step) {
    case FlowStep::charter_name:
      if (value.empty()) return stay(ctx, std::move(flow), "The charter name cannot be empty. What is the charter name?");
      if (ctx.find_charter_by_name(value)) {
        return stay(ctx, std::move(flow),
                    "A charter named '" + value + "' already exists. Please choose another name.");
      }
      flow.collected["name"] = value;
      return next_step(ctx, std::move(flow), FlowStep::charter_app, "Which app is under test?");
    case FlowStep::charter_app:
      if (value.empty()) return stay(ctx, std::move(flow), "The app name cannot be empty. Which app is under test?");
      flow.collected["app_name"] = value;
      return next_step(ctx, std::move(flow), FlowStep::charter_goals,
                       "Describe the goals to be achieved in sessions using this charter.");
    case FlowStep::charter_goals:
      if (value.empty()) return stay(ctx, std::move(flow), "The goals cannot be empty. What should this charter achieve?");
      flow.collected["goals"] = value;
      return next_step(ctx, std::move(flow), FlowStep::charter_attachments, attachments_prompt(flow.attachments.size()));
    case FlowStep::charter_attachments:
      return attachments_step(ctx, std::move(flow), input);
    default:
      break;
  }
  throw std::logic_error("charter flow in foreign step");
}

FlowAdvance advance_report(FlowState flow, const FlowInput& input, const EngineState& ctx) {
  const std::string value(text::trim(input.text));
  switch (flow.step) {
    case FlowStep::report_charter:
      if (!ctx.find_charter_by_name(value)) {
        return stay(ctx, std::move(flow),
                    "I don't know a charter named '" + value + "'. Registered charters: " + charter_names(ctx) + ".");
      }
      flow.collected["charter"] = value;
      return next_step(ctx, std::move(flow), FlowStep::report_type, "Is it a bug or an issue?");
    case FlowStep::report_type: {
      const auto type = report_type_from_string(value);
      if (!type) return stay(ctx, std::move(flow), "Please answer 'bug' or 'issue'.");
      flow.collected["type"] = std::string(to_string(*type));
      return next_step(ctx, std::move(flow), FlowStep::report_description,
                       "Describe the " + std::string(to_string(*type)) + " in detail: what you did, what happened and what you expected.");
    }
    case FlowStep::report_description:
      if (value.empty()) return stay(ctx, std::move(flow), "The description cannot be empty. Please describe what happened.");
      flow.collected["description"] = value;
      return next_step(ctx, std::move(flow), FlowStep::report_attachments, attachments_prompt(flow.attachments.size()));
    case FlowStep::report_attachments:
      return attachments_step(ctx, std::move(flow), input);
    default:
      break;
  }
  throw std::logic_error("report flow in foreign step");
}

FlowAdvance advance_start(FlowState flow, const FlowInput& input, const EngineState& ctx) {
  const auto minutes = parse_duration_minutes(input.text);
  if (!minutes) {
    return stay(ctx, std::move(flow), "Please give the time limit as a positive number of minutes (for example 15).");
  }
  std::ostringstream out;
  out << *minutes;
  flow.collected["duration"] = out.str();
  return {FlowResult{std::move(flow)}, std::nullopt};
}

FlowAdvance advance_help(const EngineContext& ctx, FlowState flow, const FlowInput& input, const EngineState& state) {
  const std::string value(text::trim(input.text));
  if (const auto group = group_from_key(value)) {
    return stay(state, std::move(flow), list_group(*ctx.catalog, *group) + "\nType one of the keys above, or 'cancel'.");
  }
  const auto found = lookup(*ctx.catalog, value);
  if (const auto* miss = std::get_if<LookupMiss>(&found)) {
    std::string message = "I have no topic '" + value + "'.";
    if (!miss->nearest.empty()) message += " Closest keys: " + join(miss->nearest) + ".";
    message += " Type one of the listed keys, or 'cancel'.";
    return stay(state, std::move(flow), std::move(message));
  }
  flow.collected["topic"] = std::get<const KnowledgeItem*>(found)->id;
  return {FlowResult{std::move(flow)}, std::nullopt};
}

// Transition helpers -----------------------------------------------------------

class Step {
 public:
  Step(const EngineContext& ctx, EngineState state) : ctx_(ctx) { t_.state = std::move(state); }

  EngineState& state() { return t_.state; }
  void emit(OutboundAction a) { t_.actions.push_back(std::move(a)); }
  void effect(Effect e) { t_.effects.push_back(std::move(e)); }
  Transition finish() && { return std::move(t_); }
  Transition& transition() { return t_; }

  void on_message(const InboundMessage& m);
  void on_timer(const TimerEvent& e);

 private:
  void on_command(const Command& c, const InboundMessage& m);
  void on_flow_input(const FlowInput& input, const InboundMessage& m);
  void open_flow(FlowKind kind, Timestamp now);
  void close_flow(bool completed);
  void complete_flow(const FlowState& flow, const InboundMessage& m);
  void end_session(Timestamp at, EndReason reason);
  void deliver_suggestion();
  bool reject_if_flow_open();

  const EngineContext& ctx_;
  Transition t_;
};

void Step::on_message(const InboundMessage& m) {
  auto& st = state();
  ParsedInput parsed = parse_message(m.text, st.open_flow.has_value());
  // An attachment-only message answers the open dialog.
  if (st.open_flow && std::holds_alternative<Plain>(parsed) && !m.attachments.empty()) parsed = FlowReply{""};
  t_.parsed = parsed;

  if (!st.introduced) {
    st.introduced = true;
    emit(make_action(ActionKind::system_notice, st, introduction_text(ctx_.config)));
  }

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Command>) {
          on_command(p, m);
        } else if constexpr (std::is_same_v<T, InvalidCommand>) {
          emit(reply(st, "I don't know the command '" + p.raw + "'. Type ?commands to see what I understand."));
        } else if constexpr (std::is_same_v<T, FlowReply>) {
          on_flow_input(FlowInput{p.text, m.attachments}, m);
        }
        // Plain chatter between testers is not addressed to the bot.
      },
      parsed);
}

bool Step::reject_if_flow_open() {
  auto& st = state();
  if (!st.open_flow) return false;
  emit(reply(st, "Please finish the open " + std::string(to_string(st.open_flow->kind)) +
                     " dialog first, or type 'cancel' to abort it."));
  return true;
}

void Step::on_command(const Command& c, const InboundMessage& m) {
  auto& st = state();
  switch (c.name) {
    case CommandName::commands:
      emit(reply(st, render_command_list()));
      return;
    case CommandName::manual:
      emit(reply(st, render_manual(ctx_.manual)));
      return;
    case CommandName::charter:
      if (reject_if_flow_open()) return;
      open_flow(FlowKind::charter, m.timestamp);
      return;
    case CommandName::start:
      if (st.active_session) {
        const auto left = std::chrono::duration_cast<std::chrono::seconds>(st.active_session->remaining(m.timestamp));
        emit(reply(st, "A session is already running (" + text::format_minutes_seconds(left.count()) +
                           " left). Type ?stop to end it early."));
        return;
      }
      if (reject_if_flow_open()) return;
      open_flow(FlowKind::start, m.timestamp);
      return;
    case CommandName::stop: {
      if (!st.active_session) {
        emit(reply(st, "There is no active test session to stop."));
        return;
      }
      const auto elapsed =
          std::chrono::duration_cast<std::chrono::seconds>(m.timestamp - st.active_session->started_at);
      const auto id = st.active_session->id;
      end_session(m.timestamp, EndReason::stopped);
      emit(reply(st, "Session " + id.str() + " stopped after " + text::format_minutes_seconds(elapsed.count()) + "."));
      return;
    }
    case CommandName::report:
      if (!st.active_session) {
        emit(reply(st, "There is no active test session. Start one with ?start before reporting bugs or issues."));
        return;
      }
      if (st.charters.empty()) {
        emit(reply(st, "No charters are registered yet. Register one with ?charter first."));
        return;
      }
      if (reject_if_flow_open()) return;
      open_flow(FlowKind::report, m.timestamp);
      return;
    case CommandName::help: {
      if (!c.argument) {
        if (reject_if_flow_open()) return;
        open_flow(FlowKind::help, m.timestamp);
        return;
      }
      if (const auto group = group_from_key(*c.argument)) {
        emit(reply(st, list_group(*ctx_.catalog, *group)));
        return;
      }
      const auto found = lookup(*ctx_.catalog, *c.argument);
      if (const auto* item = std::get_if<const KnowledgeItem*>(&found)) {
        emit(reply(st, render_item(**item)));
      } else {
        const auto& miss = std::get<LookupMiss>(found);
        std::string message = "I have no topic '" + miss.key + "'.";
        if (!miss.nearest.empty()) message += " Closest keys: " + join(miss.nearest) + ".";
        message += " Type ?help to list all topics.";
        emit(reply(st, std::move(message)));
      }
      return;
    }
  }
}

void Step::open_flow(FlowKind kind, Timestamp now) {
  auto& st = state();
  FlowState flow;
  flow.id = make_id<FlowTag>(st.channel, "flow", ++st.counters.flows);
  flow.kind = kind;
  flow.started_at = now;
  switch (kind) {
    case FlowKind::charter: flow.step = FlowStep::charter_name; break;
    case FlowKind::report:
      flow.step = FlowStep::report_charter;
      flow.session = st.active_session->id;
      break;
    case FlowKind::start: flow.step = FlowStep::start_duration; break;
    case FlowKind::help: flow.step = FlowStep::help_topic; break;
  }
  effect(FlowOpened{flow.id, kind});
  auto message = first_prompt(kind, st, *ctx_.catalog);
  // The topic listing answers the tester's ?help; the other flows ask for input.
  OutboundAction action = kind == FlowKind::help ? reply(st, std::move(message))
                                                 : prompt(st.channel, flow, std::move(message));
  action.flow = flow.id;
  emit(std::move(action));
  st.open_flow = std::move(flow);
}

void Step::close_flow(bool completed) {
  auto& st = state();
  effect(FlowClosed{st.open_flow->id, st.open_flow->kind, completed});
  st.open_flow.reset();
  if (st.suggestion_pending) {
    st.suggestion_pending = false;
    if (st.active_session) deliver_suggestion();
  }
}

void Step::on_flow_input(const FlowInput& input, const InboundMessage& m) {
  auto& st = state();
  if (is_keyword(input.text, kCancelKeyword)) {
    const auto kind = st.open_flow->kind;
    emit(reply(st, "Okay, the " + std::string(to_string(kind)) + " dialog was canceled."));
    close_flow(false);
    return;
  }
  FlowState flow = *st.open_flow;
  const bool collects_attachments = flow.kind == FlowKind::charter || flow.kind == FlowKind::report;
  if (collects_attachments) {
    flow.attachments.insert(flow.attachments.end(), input.attachments.begin(), input.attachments.end());
  }
  auto advanced = advance_flow(ctx_, std::move(flow), input, st);
  std::visit(
      [&](auto& next) {
        using T = std::decay_t<decltype(next)>;
        if constexpr (std::is_same_v<T, FlowState>) {
          st.open_flow = std::move(next);
        } else if constexpr (std::is_same_v<T, FlowResult>) {
          st.open_flow = next.flow;
          complete_flow(next.flow, m);
        } else {
          emit(reply(st, "Okay, the " + std::string(to_string(next.flow.kind)) + " dialog was canceled."));
          close_flow(false);
        }
      },
      advanced.next);
  if (advanced.action) emit(std::move(*advanced.action));
}

void Step::complete_flow(const FlowState& flow, const InboundMessage& m) {
  auto& st = state();
  switch (flow.kind) {
    case FlowKind::charter: {
      CharterDraft draft{flow.collected.at("name"), flow.collected.at("app_name"), flow.collected.at("goals"),
                         flow.attachments, m.timestamp};
      auto [next, id] = register_charter(std::move(st), draft);
      st = std::move(next);
      effect(CharterRegistered{*st.find_charter(id)});
      emit(reply(st, "Charter '" + draft.name + "' registered with id " + id.str() + "."));
      break;
    }
    case FlowKind::report: {
      const Charter charter = *st.find_charter_by_name(flow.collected.at("charter"));
      ReportDraft draft{*flow.session,
                        charter.id,
                        *report_type_from_string(flow.collected.at("type")),
                        flow.collected.at("description"),
                        flow.attachments,
                        m.timestamp,
                        m.user};
      auto [next, report] = file_report(std::move(st), draft);
      st = std::move(next);
      std::string message = "Thanks! " + std::string(to_string(report.type)) + " report " + report.id.str() +
                             " registered for charter '" + charter.name + "'";
      if (!report.attachments.empty()) message += " with " + std::to_string(report.attachments.size()) + " attachment(s)";
      message += ".";
      if (report.late) message += " The session had already ended, so the report is flagged as late.";
      emit(reply(st, std::move(message)));
      effect(ReportFiled{std::move(report)});
      break;
    }
    case FlowKind::start: {
      SessionRequest request;
      request.id = make_id<SessionTag>(st.channel, "session", ++st.counters.sessions);
      request.channel = st.channel;
      request.duration_minutes = std::stod(flow.collected.at("duration"));
      request.now = m.timestamp;
      request.reminders = ctx_.config.reminders;
      request.suggestions = ctx_.config.suggestions;
      request.stream = st.counters.sessions;
      st.active_session = start_session(request, std::nullopt);
      const auto& s = *st.active_session;
      effect(SessionStarted{s.id, s.started_at, s.duration});
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(s.duration).count();
      emit(reply(st, "Session " + s.id.str() + " started: you have " + text::format_minutes_seconds(secs) +
                         ". I will remind you of the remaining time. Happy exploring!"));
      break;
    }
    case FlowKind::help: {
      const auto* item = ctx_.catalog->find(flow.collected.at("topic"));
      emit(reply(st, render_item(*item)));
      break;
    }
  }
  close_flow(true);
}

void Step::end_session(Timestamp at, EndReason reason) {
  auto& st = state();
  auto& s = *st.active_session;
  s.ended_at = at;
  s.end_reason = reason;
  effect(SessionEnded{s.id, at, reason});
  st.active_session.reset();
  st.suggestion_pending = false;
}

void Step::deliver_suggestion() {
  auto& st = state();
  const KnowledgeItem* item = pick_suggestion(st.active_session->pick_rng, *ctx_.catalog);
  if (!item) {
    if (!st.empty_catalog_noticed) {
      st.empty_catalog_noticed = true;
      emit(make_action(ActionKind::system_notice, st, "The knowledge catalog is empty, so no suggestions can be made."));
    }
    return;
  }
  auto action = make_action(ActionKind::suggestion, st, "Suggestion: " + render_item(*item));
  action.item_id = item->id;
  emit(std::move(action));
}

void Step::on_timer(const TimerEvent& e) {
  auto& st = state();
  if (!st.active_session || st.active_session->id != e.session) return;
  switch (e.kind) {
    case TimerKind::reminder_due: {
      if (e.fraction >= 1.0) {
        emit(make_action(ActionKind::reminder, st,
                         "Time is up! Session " + e.session.str() + " has ended. Thanks for testing."));
        return;
      }
      const auto left = std::chrono::duration_cast<std::chrono::seconds>(st.active_session->remaining(e.due_at));
      const int percent = static_cast<int>(std::lround(e.fraction * 100));
      emit(make_action(ActionKind::reminder, st,
                       "Reminder: " + text::format_minutes_seconds(left.count()) + " left in this session (" +
                           std::to_string(percent) + "% of the time elapsed)."));
      return;
    }
    case TimerKind::suggestion_due:
      if (st.open_flow) {
        st.suggestion_pending = true;
      } else {
        deliver_suggestion();
      }
      return;
    case TimerKind::session_expired:
      end_session(e.due_at, EndReason::expired);
      return;
  }
}

}  // namespace

FlowAdvance advance_flow(const EngineContext& ctx, FlowState flow, const FlowInput& input, const EngineState& context) {
  if (is_keyword(input.text, kCancelKeyword)) return {FlowCanceled{std::move(flow)}, std::nullopt};
  switch (flow.kind) {
    case FlowKind::charter: return advance_charter(std::move(flow), input, context);
    case FlowKind::report: return advance_report(std::move(flow), input, context);
    case FlowKind::start: return advance_start(std::move(flow), input, context);
    case FlowKind::help: return advance_help(ctx, std::move(flow), input, context);
  }
  throw std::logic_error("unknown flow kind");
}

std::pair<EngineState, CharterId> register_charter(EngineState state, const CharterDraft& draft) {
  using Code = RegistrationError::Code;
  if (text::trim(draft.name).empty() || text::trim(draft.app_name).empty() || text::trim(draft.goals).empty()) {
    throw RegistrationError(Code::empty_field, "charter name, app name and goals must be non-empty");
  }
  if (state.find_charter_by_name(draft.name)) {
    throw RegistrationError(Code::duplicate_name, "a charter named '" + draft.name + "' already exists");
  }
  Charter charter{make_id<CharterTag>(state.channel, "charter", ++state.counters.charters),
                  draft.name,
                  draft.app_name,
                  draft.goals,
                  draft.attachments,
                  draft.created_at};
  auto id = charter.id;
  state.charters.push_back(std::move(charter));
  return {std::move(state), std::move(id)};
}

std::pair<EngineState, Report> file_report(EngineState state, const ReportDraft& draft) {
  using Code = RegistrationError::Code;
  if (!state.find_charter(draft.charter)) {
    throw RegistrationError(Code::unknown_charter, "unknown charter '" + draft.charter.str() + "'");
  }
  if (draft.session.empty()) throw RegistrationError(Code::unknown_session, "report without a session");
  if (text::trim(draft.description).empty()) {
    throw RegistrationError(Code::empty_field, "report description must be non-empty");
  }
  Report report;
  report.id = make_id<ReportTag>(state.channel, "report", ++state.counters.reports);
  report.session = draft.session;
  report.charter = draft.charter;
  report.type = draft.type;
  report.description = draft.description;
  report.attachments = draft.attachments;
  report.reported_at = draft.reported_at;
  report.reporter = draft.reporter;
  report.late = !state.active_session || state.active_session->id != draft.session;
  return {std::move(state), std::move(report)};
}

Transition handle_event(const EngineContext& ctx, EngineState state, const Event& event) {
  Step step(ctx, std::move(state));
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, InboundMessage>) {
          step.on_message(e);
        } else {
          step.on_timer(e);
        }
      },
      event);
  return std::move(step).finish();
}

}  // namespace explorebot
