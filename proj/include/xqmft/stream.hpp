#pragma once

// Single-pass evaluation of an MFT over an XML event stream.
//
// The input is kept as a linked structure of slots: a slot is a forest
// position whose head node may not have arrived yet. Pending computations
// hold slots, so input that no pending computation can reach is released as
// soon as it is read. Parameters are call-by-need thunks whose output is
// recorded when they are shared.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "xqmft/evaluate.hpp"
#include "xqmft/mft.hpp"
#include "xqmft/xml.hpp"

namespace xqmft {

struct StreamStats {
  std::size_t peak_retained_nodes = 0;
  std::size_t peak_suspensions = 0;
  std::size_t events_in = 0;
  std::size_t events_out = 0;
  /// Events read before the first output event was emitted.
  std::size_t first_output_after = 0;
  double ms = 0;
};

namespace detail::stream {

struct Counters {
  std::size_t nodes = 0;
  std::size_t thunks = 0;
};

struct NodeInfo {
  NodeKind kind;
  std::string label;
};

struct Slot;
using SlotPtr = std::shared_ptr<Slot>;

struct InNode {
  InNode(Counters* c, NodeKind kind, std::string label)
      : info(std::make_shared<const NodeInfo>(NodeInfo{kind, std::move(label)})),
        first(std::make_shared<Slot>()), next(std::make_shared<Slot>()), counters(c) {
    ++counters->nodes;
  }
  ~InNode() { --counters->nodes; }
  InNode(const InNode&) = delete;
  InNode& operator=(const InNode&) = delete;

  std::shared_ptr<const NodeInfo> info;
  SlotPtr first;
  SlotPtr next;
  Counters* counters;
};

/// A forest position: either known (node set or end reached) or pending.
struct Slot {
  std::shared_ptr<InNode> node;
  bool end = false;

  bool known() const { return node || end; }

  Slot() = default;
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;
  // Sibling chains are released iteratively.
  ~Slot() {
    std::shared_ptr<InNode> n = std::move(node);
    while (n && n.use_count() == 1) {
      SlotPtr s = std::move(n->next);
      n.reset();
      if (!s || s.use_count() != 1) break;
      n = std::move(s->node);
    }
  }
};

struct Thunk;
using ThunkPtr = std::shared_ptr<Thunk>;
using Args = std::shared_ptr<const std::vector<ThunkPtr>>;

enum Need : std::uint8_t { kX0 = 1, kX1 = 2, kX2 = 4, kParams = 8 };

struct Env {
  SlotPtr x0, x1, x2;
  std::shared_ptr<const NodeInfo> info;
  Args args;
  std::size_t stay = 0;

  void keep(std::uint8_t need) {
    if (!(need & kX0)) x0.reset();
    if (!(need & kX1)) x1.reset();
    if (!(need & kX2)) x2.reset();
    if (!(need & kParams)) args.reset();
  }
};

struct SeqFrame {
  const Rhs* items;
  std::size_t pos;
  Env env;
};
struct CallFrame {
  int state;
  SlotPtr at;
  Args args;
  std::size_t stay;
};
struct ReadFrame {
  ThunkPtr thunk;
  std::size_t pos = 0;
};
struct EndFrame {};

using Frame = std::variant<SeqFrame, CallFrame, ReadFrame, EndFrame>;

struct Producer {
  std::vector<Frame> stack;
};

struct Thunk {
  explicit Thunk(Counters* c) : counters(c) { ++counters->thunks; }
  ~Thunk() { --counters->thunks; }
  Thunk(const Thunk&) = delete;
  Thunk& operator=(const Thunk&) = delete;

  Producer prod;
  std::vector<XmlEvent> log;
  bool done = false;
  Counters* counters;
};

enum class Status { Emitted, Blocked, Done };

}  // namespace detail::stream

/// Incremental engine: feed input events with step(), collect output events.
class StreamEngine {
 public:
  explicit StreamEngine(const Mft& m, const EvalOptions& opts = {})
      : m_(m), index_(m), budget_(effective_budget(m, opts)), cur_(std::make_shared<Slot>()) {
    main_.stack.push_back(CallFrame{m.initial, cur_, std::make_shared<std::vector<ThunkPtr>>(), 0});
    start_ = std::chrono::steady_clock::now();
  }

  /// Consumes one input event and returns the output events it unblocked.
  std::vector<XmlEvent> step(const XmlEvent& e) {
    if (done_input_) throw std::logic_error("stream engine: input already ended");
    feed(e);
    ++stats_.events_in;
    stats_.peak_retained_nodes = std::max(stats_.peak_retained_nodes, counters_.nodes);
    std::vector<XmlEvent> out;
    pump(out);
    if (!out.empty() && stats_.events_out == 0) stats_.first_output_after = stats_.events_in;
    stats_.events_out += out.size();
    stats_.peak_suspensions =
        std::max(stats_.peak_suspensions, counters_.thunks + main_.stack.size());
    if (e.kind == EventKind::Eof) {
      if (!finished_) throw std::logic_error("stream engine: computation pending at end of input");
      stats_.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
                      .count();
    }
    return out;
  }

  bool finished() const { return finished_; }
  const StreamStats& stats() const { return stats_; }
  std::size_t retained_nodes() const { return counters_.nodes; }

 private:
  using Slot = detail::stream::Slot;
  using SlotPtr = detail::stream::SlotPtr;
  using InNode = detail::stream::InNode;
  using Thunk = detail::stream::Thunk;
  using ThunkPtr = detail::stream::ThunkPtr;
  using Args = detail::stream::Args;
  using Env = detail::stream::Env;
  using Producer = detail::stream::Producer;
  using SeqFrame = detail::stream::SeqFrame;
  using CallFrame = detail::stream::CallFrame;
  using ReadFrame = detail::stream::ReadFrame;
  using EndFrame = detail::stream::EndFrame;
  using Status = detail::stream::Status;

  void open(NodeKind kind, std::string label) {
    auto n = std::make_shared<InNode>(&counters_, kind, std::move(label));
    SlotPtr first = n->first;
    after_.push_back(n->next);
    cur_->node = std::move(n);
    cur_ = std::move(first);
  }

  void flush_text() {
    if (!has_text_) return;
    auto n = std::make_shared<InNode>(&counters_, NodeKind::Text, std::move(text_));
    n->first->end = true;
    SlotPtr next = n->next;
    cur_->node = std::move(n);
    cur_ = std::move(next);
    text_.clear();
    has_text_ = false;
  }

  void feed(const XmlEvent& e) {
    switch (e.kind) {
      case EventKind::Text:
        text_ += e.value;
        has_text_ = true;
        return;
      case EventKind::StartElement:
        flush_text();
        open(NodeKind::Element, e.value);
        return;
      case EventKind::StartAttribute:
        flush_text();
        open(NodeKind::Attribute, e.value);
        return;
      case EventKind::End:
        flush_text();
        if (after_.empty()) throw SyntaxError("unbalanced end event", 0, 0);
        cur_->end = true;
        cur_ = std::move(after_.back());
        after_.pop_back();
        return;
      case EventKind::Eof:
        flush_text();
        if (!after_.empty()) throw SyntaxError("unexpected end of input", 0, 0);
        cur_->end = true;
        cur_.reset();
        done_input_ = true;
        return;
    }
  }

  static std::uint8_t need_of(const Item& it) {
    using namespace detail::stream;
    if (std::holds_alternative<Param>(it.v)) return kParams;
    std::uint8_t n = 0;
    if (auto* o = std::get_if<OutNode>(&it.v)) {
      for (const Item& c : o->children) n |= need_of(c);
    } else if (auto* c = std::get_if<Call>(&it.v)) {
      n |= c->input == 0 ? kX0 : c->input == 1 ? kX1 : kX2;
      for (const Rhs& a : c->args)
        for (const Item& x : a) n |= need_of(x);
    }
    return n;
  }

  // needs[k]: inputs and parameters used by items k.. of rhs.
  const std::vector<std::uint8_t>& needs(const Rhs* rhs) {
    auto [it, fresh] = needs_.try_emplace(rhs);
    if (fresh) {
      it->second.assign(rhs->size() + 1, 0);
      for (std::size_t k = rhs->size(); k-- > 0;)
        it->second[k] = it->second[k + 1] | need_of((*rhs)[k]);
    }
    return it->second;
  }

  ThunkPtr make_thunk(const Rhs& a, const Env& env) {
    if (a.size() == 1)
      if (auto* p = std::get_if<Param>(&a[0].v)) return (*env.args)[p->index - 1];
    auto t = std::make_shared<Thunk>(&counters_);
    if (a.empty()) {
      t->done = true;
      return t;
    }
    Env e = env;
    e.keep(needs(&a)[0]);
    t->prod.stack.push_back(SeqFrame{&a, 0, std::move(e)});
    return t;
  }

  void pump(std::vector<XmlEvent>& out) {
    if (finished_) return;
    Status s;
    while ((s = advance(main_, out)) == Status::Emitted) {
    }
    if (s == Status::Done) finished_ = true;
  }

  Status advance(Producer& p, std::vector<XmlEvent>& out) {
    while (!p.stack.empty()) {
      auto& f = p.stack.back();
      if (std::holds_alternative<EndFrame>(f)) {
        p.stack.pop_back();
        out.push_back(XmlEvent::end());
        return Status::Emitted;
      }
      if (auto* c = std::get_if<CallFrame>(&f)) {
        const Slot& s = *c->at;
        if (!s.known()) return Status::Blocked;
        if (c->stay > budget_)
          throw BudgetExceeded("stay-step budget exceeded in state " + m_.states[c->state].name);
        int r = s.node ? index_.lookup(c->state, s.node->info->kind, s.node->info->label)
                       : index_.eps(c->state);
        if (r < 0)
          throw std::logic_error("no applicable rule for state " + m_.states[c->state].name);
        Env env;
        env.x0 = c->at;
        if (s.node) {
          env.x1 = s.node->first;
          env.x2 = s.node->next;
          env.info = s.node->info;
        }
        env.args = std::move(c->args);
        env.stay = c->stay;
        const Rhs* rhs = &m_.rules[r].rhs;
        env.keep(needs(rhs)[0]);
        p.stack.back() = SeqFrame{rhs, 0, std::move(env)};
        continue;
      }
      if (auto* rf = std::get_if<ReadFrame>(&f)) {
        Thunk& t = *rf->thunk;
        if (rf->pos < t.log.size()) {
          out.push_back(t.log[rf->pos++]);
          return Status::Emitted;
        }
        if (t.done) {
          p.stack.pop_back();
          continue;
        }
        if (rf->pos == 0 && rf->thunk.use_count() == 1) {
          // Sole consumer: run the thunk's frames in place without recording.
          std::vector<detail::stream::Frame> frames = std::move(t.prod.stack);
          p.stack.pop_back();
          for (auto& fr : frames) p.stack.push_back(std::move(fr));
          continue;
        }
        Status s = advance(t.prod, t.log);
        if (s == Status::Blocked) return s;
        if (s == Status::Done) {
          t.done = true;
          t.prod.stack = {};
        }
        continue;
      }
      auto& sf = std::get<SeqFrame>(f);
      if (sf.pos == sf.items->size()) {
        p.stack.pop_back();
        continue;
      }
      const Item& it = (*sf.items)[sf.pos++];
      Env env = sf.env;
      if (sf.pos == sf.items->size()) p.stack.pop_back();  // tail position
      else sf.env.keep(needs(sf.items)[sf.pos]);

      if (auto* o = std::get_if<OutNode>(&it.v)) {
        NodeKind kind = o->copy_label ? env.info->kind : o->kind;
        const std::string& label = o->copy_label ? env.info->label : o->label;
        if (kind == NodeKind::Text) {
          out.push_back(XmlEvent::text(label));
          return Status::Emitted;
        }
        out.push_back(kind == NodeKind::Attribute ? XmlEvent::start_attribute(label)
                                                  : XmlEvent::start(label));
        p.stack.push_back(EndFrame{});
        if (!o->children.empty()) {
          env.keep(needs(&o->children)[0]);
          p.stack.push_back(SeqFrame{&o->children, 0, std::move(env)});
        }
        return Status::Emitted;
      }
      if (auto* y = std::get_if<Param>(&it.v)) {
        p.stack.push_back(ReadFrame{(*env.args)[y->index - 1], 0});
        continue;
      }
      if (auto* c = std::get_if<Call>(&it.v)) {
        auto args = std::make_shared<std::vector<ThunkPtr>>();
        args->reserve(c->args.size());
        for (const Rhs& a : c->args) args->push_back(make_thunk(a, env));
        SlotPtr at = c->input == 0 ? env.x0 : c->input == 1 ? env.x1 : env.x2;
        std::size_t stay = c->input == 0 ? env.stay + 1 : 0;
        p.stack.push_back(CallFrame{c->state, std::move(at), std::move(args), stay});
        continue;
      }
    }
    return Status::Done;
  }

  const Mft& m_;
  RuleIndex index_;
  std::size_t budget_;
  detail::stream::Counters counters_;
  SlotPtr cur_;
  std::vector<SlotPtr> after_;
  std::string text_;
  bool has_text_ = false;
  bool done_input_ = false;
  bool finished_ = false;
  Producer main_;
  std::unordered_map<const Rhs*, std::vector<std::uint8_t>> needs_;
  StreamStats stats_;
  std::chrono::steady_clock::time_point start_;
};

/// Runs m over the events of `src` (anything with XmlEvent next()), passing
/// output events to `sink` as soon as they are determined. The sink receives
/// a final Eof event.
template <class Source, class Sink>
StreamStats stream_run(const Mft& m, Source& src, Sink&& sink, const EvalOptions& opts = {}) {
  StreamEngine engine(m, opts);
  while (true) {
    XmlEvent e = src.next();
    for (XmlEvent& o : engine.step(e)) sink(std::move(o));
    if (e.kind == EventKind::Eof) break;
  }
  sink(XmlEvent::eof());
  return engine.stats();
}

/// Statistics of a run with the output discarded.
template <class Source>
StreamStats measure(const Mft& m, Source& src, const EvalOptions& opts = {}) {
  return stream_run(m, src, [](const XmlEvent&) {}, opts);
}

/// Streams an XML string through m and returns the serialized output.
inline std::string stream_xml(const Mft& m, std::string_view xml, StreamStats* stats = nullptr,
                              const EvalOptions& opts = {}) {
  std::istringstream in{std::string(xml)};
  XmlReader reader(in);
  std::ostringstream out;
  XmlWriter writer(out);
  StreamStats s = stream_run(m, reader, writer, opts);
  if (stats) *stats = s;
  return out.str();
}

}  // namespace xqmft
