#include "explorebot/host.hpp"

#include <sstream>

namespace explorebot {

using nlohmann::json;

std::string_view effect_name(const Effect& effect) {
  return std::visit(
      [](const auto& e) -> std::string_view {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, FlowOpened>) return "flow_opened";
        else if constexpr (std::is_same_v<T, FlowClosed>) return "flow_closed";
        else if constexpr (std::is_same_v<T, CharterRegistered>) return "charter_registered";
        else if constexpr (std::is_same_v<T, ReportFiled>) return "report_filed";
        else if constexpr (std::is_same_v<T, SessionStarted>) return "session_started";
        else return "session_ended";
      },
      effect);
}

json effect_to_json(const Effect& effect) {
  json j = std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, FlowOpened>) {
          return {{"flow", e.flow.str()}, {"flow_kind", to_string(e.kind)}};
        } else if constexpr (std::is_same_v<T, FlowClosed>) {
          return {{"flow", e.flow.str()}, {"flow_kind", to_string(e.kind)}, {"completed", e.completed}};
        } else if constexpr (std::is_same_v<T, CharterRegistered>) {
          const auto& c = e.charter;
          return {{"charter",
                   {{"id", c.id.str()},
                    {"name", c.name},
                    {"app_name", c.app_name},
                    {"goals", c.goals},
                    {"attachments", attachments_to_json(c.attachments)},
                    {"created_at", to_millis(c.created_at)}}}};
        } else if constexpr (std::is_same_v<T, ReportFiled>) {
          const auto& r = e.report;
          return {{"report",
                   {{"id", r.id.str()},
                    {"session", r.session.str()},
                    {"charter", r.charter.str()},
                    {"type", to_string(r.type)},
                    {"description", r.description},
                    {"attachments", attachments_to_json(r.attachments)},
                    {"reported_at", to_millis(r.reported_at)},
                    {"reporter", r.reporter.str()},
                    {"late", r.late}}}};
        } else if constexpr (std::is_same_v<T, SessionStarted>) {
          return {{"session", e.session.str()},
                  {"started_at", to_millis(e.started_at)},
                  {"duration_ms", e.duration.count()}};
        } else {
          return {{"session", e.session.str()}, {"ended_at", to_millis(e.ended_at)}, {"reason", to_string(e.reason)}};
        }
      },
      effect);
  j["event"] = effect_name(effect);
  return j;
}

namespace {

PayloadKind payload_for(const ParsedInput& parsed) {
  switch (parsed.index()) {
    case 0: return PayloadKind::command;
    case 1: return PayloadKind::invalid_command;
    case 2: return PayloadKind::flow_reply;
    default: return PayloadKind::plain;
  }
}

PayloadKind payload_for(ActionKind kind) {
  switch (kind) {
    case ActionKind::reply: return PayloadKind::reply;
    case ActionKind::prompt: return PayloadKind::prompt;
    case ActionKind::reminder: return PayloadKind::reminder;
    case ActionKind::suggestion: return PayloadKind::suggestion;
    case ActionKind::system_notice: return PayloadKind::system;
  }
  return PayloadKind::system;
}

std::optional<SessionId> session_of(const EngineState& state) {
  if (state.active_session) return state.active_session->id;
  return std::nullopt;
}

std::string timer_text(const TimerEvent& e) {
  std::ostringstream out;
  out << to_string(e.kind);
  if (e.kind == TimerKind::reminder_due) out << ' ' << e.fraction;
  return out.str();
}

}  // namespace

Host::Host(std::shared_ptr<const EngineContext> ctx, EventStore& store, ActionSink& sink)
    : ctx_(std::move(ctx)), store_(store), sink_(sink) {
  if (!ctx_) throw std::invalid_argument("host needs an engine context");
}

Host::Channel& Host::channel(const ChannelId& id) {
  {
    std::shared_lock lock(channels_mutex_);
    if (auto it = channels_.find(id); it != channels_.end()) return *it->second;
  }
  std::unique_lock lock(channels_mutex_);
  auto& slot = channels_[id];
  if (!slot) slot = std::make_unique<Channel>(id);
  return *slot;
}

Host::Channel* Host::find(const ChannelId& id) const {
  std::shared_lock lock(channels_mutex_);
  auto it = channels_.find(id);
  return it == channels_.end() ? nullptr : it->second.get();
}

SubmitStatus Host::submit(const InboundMessage& message) {
  if (message.text.empty() && message.attachments.empty()) {
    throw std::invalid_argument("inbound message needs text or attachments");
  }
  Channel& ch = channel(message.channel);
  std::lock_guard lock(ch.mutex);
  if (ch.halted) return SubmitStatus::halted;
  if (message.timestamp < ch.clock) throw std::invalid_argument("message older than the channel clock");
  fire_due(ch, message.timestamp);
  if (ch.halted) return SubmitStatus::halted;
  ch.clock = message.timestamp;
  process(ch, message);
  return ch.halted ? SubmitStatus::halted : SubmitStatus::accepted;
}

SubmitStatus Host::advance_clock(const ChannelId& id, Timestamp now) {
  Channel& ch = channel(id);
  std::lock_guard lock(ch.mutex);
  if (ch.halted) return SubmitStatus::halted;
  if (now < ch.clock) return SubmitStatus::accepted;
  fire_due(ch, now);
  ch.clock = now;
  return ch.halted ? SubmitStatus::halted : SubmitStatus::accepted;
}

void Host::advance_all(Timestamp now) {
  for (const auto& id : channels()) advance_clock(id, now);
}

std::optional<EngineState> Host::snapshot(const ChannelId& id) const {
  const Channel* ch = find(id);
  if (!ch) return std::nullopt;
  std::lock_guard lock(ch->mutex);
  return ch->state;
}

bool Host::halted(const ChannelId& id) const {
  const Channel* ch = find(id);
  if (!ch) return false;
  std::lock_guard lock(ch->mutex);
  return ch->halted;
}

std::vector<ChannelId> Host::channels() const {
  std::shared_lock lock(channels_mutex_);
  std::vector<ChannelId> ids;
  ids.reserve(channels_.size());
  for (const auto& [id, _] : channels_) ids.push_back(id);
  return ids;
}

void Host::fire_due(Channel& ch, Timestamp now) {
  if (!ch.state.active_session) return;
  const auto events = due_events(*ch.state.active_session, now);
  for (const auto& e : events) {
    if (ch.halted) return;
    process(ch, e);
  }
}

void Host::process(Channel& ch, const Event& event) {
  Transition t = handle_event(*ctx_, ch.state, event);
  const auto session_before = session_of(ch.state);
  const auto session_after = t.state.active_session ? session_of(t.state) : session_before;

  const auto* message = std::get_if<InboundMessage>(&event);
  const auto* timer = std::get_if<TimerEvent>(&event);
  const Timestamp at = message ? message->timestamp : timer->due_at;
  const Actor actor = message ? Actor::from_tester(message->user) : Actor::bot();

  std::vector<EventRecord> outbox;
  try {
    std::lock_guard lock(store_mutex_);
    std::optional<std::uint64_t> inbound_offset;
    EventRecord head;
    head.timestamp = at;
    head.channel = ch.state.channel;
    head.actor = actor;
    if (message) {
      head.session = session_before;
      head.direction = Direction::inbound;
      head.payload = payload_for(*t.parsed);
      head.text = message->text;
      head.attachments = message->attachments;
      if (ch.state.open_flow) head.flow = ch.state.open_flow->id;
    } else {
      head.session = timer->session;
      head.direction = Direction::internal;
      head.payload = PayloadKind::timer;
      head.text = timer_text(*timer);
      head.data = {{"timer", to_string(timer->kind)}, {"due_at", to_millis(timer->due_at)}};
      if (timer->kind == TimerKind::reminder_due) head.data["fraction"] = timer->fraction;
    }
    const auto head_offset = store_.append(head);
    if (message) inbound_offset = head_offset;

    for (const auto& effect : t.effects) {
      EventRecord r;
      r.timestamp = at;
      r.channel = ch.state.channel;
      r.session = session_after;
      r.actor = actor;
      r.direction = Direction::internal;
      r.payload = PayloadKind::system;
      r.text = std::string(effect_name(effect));
      r.data = effect_to_json(effect);
      r.correlation = head_offset;
      if (const auto* started = std::get_if<SessionStarted>(&effect)) r.session = started->session;
      if (const auto* ended = std::get_if<SessionEnded>(&effect)) r.session = ended->session;
      store_.append(std::move(r));
    }

    for (const auto& action : t.actions) {
      EventRecord r;
      r.timestamp = at;
      r.channel = ch.state.channel;
      r.session = session_after;
      r.actor = Actor::bot();
      r.direction = Direction::outbound;
      r.payload = payload_for(action.kind);
      r.text = action.text;
      r.attachments = action.attachments;
      r.flow = action.flow;
      r.item_id = action.item_id;
      if (inbound_offset && (action.kind == ActionKind::reply || action.kind == ActionKind::prompt)) {
        r.correlation = inbound_offset;
      }
      r.offset = store_.append(r);
      outbox.push_back(std::move(r));
    }
  } catch (const StoreError& e) {
    ch.halted = true;
    OutboundAction notice{ActionKind::system_notice, ch.state.channel,
                          "The audit log is unavailable, so this channel is halted to avoid losing records. (" +
                              std::string(e.what()) + ")",
                          {}, std::nullopt, std::nullopt};
    EventRecord unlogged;
    unlogged.channel = ch.state.channel;
    unlogged.timestamp = at;
    unlogged.direction = Direction::outbound;
    unlogged.payload = PayloadKind::system;
    unlogged.text = notice.text;
    sink_.deliver(notice, unlogged);
    return;
  }

  ch.state = std::move(t.state);
  for (std::size_t i = 0; i < outbox.size(); ++i) sink_.deliver(t.actions[i], outbox[i]);
}

EngineState rebuild_state(std::shared_ptr<const EngineContext> ctx, const ChannelId& channel,
                          const std::vector<EventRecord>& records, std::vector<EventRecord>* replayed) {
  MemoryEventStore store;
  NullSink sink;
  Host host(std::move(ctx), store, sink);
  for (const auto& r : records) {
    if (r.channel != channel) continue;
    if (r.direction == Direction::inbound) {
      host.submit(InboundMessage{r.channel, *r.actor.tester, r.text, r.attachments, r.timestamp});
    } else if (r.payload == PayloadKind::timer) {
      host.advance_clock(channel, r.timestamp);
    }
  }
  if (replayed) *replayed = store.records();
  auto state = host.snapshot(channel);
  return state ? *state : EngineState(channel);
}

}  // namespace explorebot
