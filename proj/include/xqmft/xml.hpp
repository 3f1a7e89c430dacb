#pragma once

// Event-level XML I/O. Attributes surface as StartAttribute, Text, End
// triples ahead of the element content, so an attribute is simply the first
// kind of child an element can have.

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xqmft/forest.hpp"

namespace xqmft {

enum class EventKind : std::uint8_t { StartElement, StartAttribute, Text, End, Eof };

struct XmlEvent {
  EventKind kind = EventKind::Eof;
  std::string value;

  static XmlEvent start(std::string name) { return {EventKind::StartElement, std::move(name)}; }
  static XmlEvent start_attribute(std::string name) {
    return {EventKind::StartAttribute, std::move(name)};
  }
  static XmlEvent text(std::string content) { return {EventKind::Text, std::move(content)}; }
  static XmlEvent end() { return {EventKind::End, {}}; }
  static XmlEvent eof() { return {EventKind::Eof, {}}; }

  bool operator==(const XmlEvent&) const = default;
};

inline std::string to_string(const XmlEvent& e) {
  switch (e.kind) {
    case EventKind::StartElement: return "Start(" + e.value + ")";
    case EventKind::StartAttribute: return "StartAttr(" + e.value + ")";
    case EventKind::Text: return "Text(\"" + e.value + "\")";
    case EventKind::End: return "End";
    case EventKind::Eof: return "Eof";
  }
  return "?";
}

struct ReaderOptions {
  /// Keep text exactly as written. By default text is trimmed and
  /// whitespace-only text between elements is dropped.
  bool keep_whitespace = false;
};

/// Pull parser over a byte stream. Supports elements, attributes, text,
/// entity and character references and CDATA; comments, processing
/// instructions and DOCTYPE declarations are skipped.
class XmlReader {
 public:
  explicit XmlReader(std::istream& in, ReaderOptions opts = {}) : in_(*in.rdbuf()), opts_(opts) {}

  XmlEvent next() {
    while (pending_pos_ == pending_.size()) {
      pending_.clear();
      pending_pos_ = 0;
      if (done_) return XmlEvent::eof();
      fill();
    }
    return std::move(pending_[pending_pos_++]);
  }

  const std::vector<std::string>& warnings() const { return warnings_; }
  /// Largest amount of character data held at once (text or one tag).
  std::size_t peak_buffered_bytes() const { return peak_buffer_; }

 private:
  int get() {
    int c = in_.sbumpc();
    if (c == std::char_traits<char>::eof()) return -1;
    if (c == '\n') {
      ++line_;
      col_ = 0;
    } else {
      ++col_;
    }
    return c;
  }
  int peek() {
    int c = in_.sgetc();
    return c == std::char_traits<char>::eof() ? -1 : c;
  }

  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, line_, col_); }

  void note_buffer(std::size_t n) { peak_buffer_ = std::max(peak_buffer_, n); }

  static bool is_space(int c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
  static bool is_name_char(int c) {
    return c > 0x7f || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.' || c == ':';
  }

  void skip_space() {
    while (is_space(peek())) get();
  }

  std::string read_name() {
    std::string name;
    while (is_name_char(peek())) name += static_cast<char>(get());
    if (name.empty()) fail("expected a name");
    return name;
  }

  static void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  // Called after '&' has been consumed.
  void read_reference(std::string& out) {
    std::string ref;
    while (true) {
      int c = get();
      if (c < 0) fail("unterminated reference");
      if (c == ';') break;
      ref += static_cast<char>(c);
      if (ref.size() > 16) fail("malformed reference");
    }
    if (ref == "lt") out += '<';
    else if (ref == "gt") out += '>';
    else if (ref == "amp") out += '&';
    else if (ref == "quot") out += '"';
    else if (ref == "apos") out += '\'';
    else if (ref.size() > 1 && ref[0] == '#') {
      unsigned long cp = 0;
      try {
        cp = ref[1] == 'x' ? std::stoul(ref.substr(2), nullptr, 16) : std::stoul(ref.substr(1));
      } catch (const std::exception&) {
        fail("malformed character reference &" + ref + ";");
      }
      append_utf8(out, cp);
    } else {
      fail("unknown entity &" + ref + ";");
    }
  }

  void skip_until(std::string_view terminator) {
    std::size_t matched = 0;
    while (matched < terminator.size()) {
      int c = get();
      if (c < 0) fail("unterminated markup, expected '" + std::string(terminator) + "'");
      if (c == terminator[matched]) {
        ++matched;
      } else {
        matched = (c == terminator[0]) ? 1 : 0;
      }
    }
  }

  void skip_doctype() {
    int depth = 0;
    while (true) {
      int c = get();
      if (c < 0) fail("unterminated DOCTYPE");
      if (c == '[') ++depth;
      if (c == ']') --depth;
      if (c == '>' && depth <= 0) return;
    }
  }

  void flush_text() {
    if (!have_text_) return;
    have_text_ = false;
    std::string t = std::move(text_);
    text_.clear();
    if (!opts_.keep_whitespace) {
      std::size_t b = 0, e = t.size();
      while (b < e && is_space(static_cast<unsigned char>(t[b]))) ++b;
      while (e > b && is_space(static_cast<unsigned char>(t[e - 1]))) --e;
      t = t.substr(b, e - b);
    }
    if (t.empty()) return;
    pending_.push_back(XmlEvent::text(std::move(t)));
  }

  void read_start_tag() {
    std::string name = read_name();
    std::vector<std::pair<std::string, std::string>> attrs;
    std::size_t tag_bytes = name.size();
    while (true) {
      skip_space();
      int c = peek();
      if (c == '/' || c == '>') break;
      if (c < 0) fail("unterminated start tag <" + name);
      std::string an = read_name();
      skip_space();
      if (get() != '=') fail("expected '=' after attribute " + an);
      skip_space();
      int q = get();
      if (q != '"' && q != '\'') fail("expected quoted attribute value");
      std::string value;
      while (true) {
        int v = get();
        if (v < 0) fail("unterminated attribute value");
        if (v == q) break;
        if (v == '&') {
          read_reference(value);
        } else if (v == '<') {
          fail("'<' in attribute value");
        } else {
          value += static_cast<char>(v);
        }
      }
      tag_bytes += an.size() + value.size();
      note_buffer(tag_bytes);
      attrs.emplace_back(std::move(an), std::move(value));
    }
    bool empty = false;
    if (peek() == '/') {
      get();
      empty = true;
    }
    if (get() != '>') fail("expected '>'");
    pending_.push_back(XmlEvent::start(name));
    for (auto& [an, av] : attrs) {
      pending_.push_back(XmlEvent::start_attribute(std::move(an)));
      pending_.push_back(XmlEvent::text(std::move(av)));
      pending_.push_back(XmlEvent::end());
    }
    if (empty) {
      pending_.push_back(XmlEvent::end());
    } else {
      open_.push_back(std::move(name));
    }
  }

  void read_end_tag() {
    std::string name = read_name();
    skip_space();
    if (get() != '>') fail("expected '>' in end tag");
    if (open_.empty()) fail("unexpected end tag </" + name + ">");
    if (open_.back() != name) fail("end tag </" + name + "> does not match <" + open_.back() + ">");
    open_.pop_back();
    pending_.push_back(XmlEvent::end());
  }

  // Reads until at least one event is queued or input ends.
  void fill() {
    while (pending_.empty()) {
      int c = get();
      if (c < 0) {
        flush_text();
        if (!open_.empty()) fail("unclosed element <" + open_.back() + ">");
        pending_.push_back(XmlEvent::eof());
        done_ = true;
        return;
      }
      if (c == '&') {
        have_text_ = true;
        read_reference(text_);
        note_buffer(text_.size());
        continue;
      }
      if (c != '<') {
        have_text_ = true;
        text_ += static_cast<char>(c);
        note_buffer(text_.size());
        continue;
      }
      int n = peek();
      if (n == '!') {
        get();
        if (peek() == '-') {
          get();
          if (get() != '-') fail("malformed comment");
          skip_until("-->");
        } else if (peek() == '[') {
          std::string tag;
          for (int i = 0; i < 7; ++i) tag += static_cast<char>(get());
          if (tag != "[CDATA[") fail("malformed CDATA section");
          have_text_ = true;
          std::size_t matched = 0;
          while (matched < 3) {
            int v = get();
            if (v < 0) fail("unterminated CDATA section");
            text_ += static_cast<char>(v);
            if (v == "]]>"[matched]) ++matched;
            else matched = (v == ']') ? 1 : 0;
          }
          text_.resize(text_.size() - 3);
          note_buffer(text_.size());
        } else {
          warnings_.push_back(std::to_string(line_) + ": skipped DOCTYPE declaration");
          skip_doctype();
        }
        continue;
      }
      if (n == '?') {
        get();
        skip_until("?>");
        continue;
      }
      flush_text();
      if (n == '/') {
        get();
        read_end_tag();
      } else {
        read_start_tag();
      }
    }
  }

  std::streambuf& in_;
  ReaderOptions opts_;
  std::vector<XmlEvent> pending_;
  std::size_t pending_pos_ = 0;
  std::vector<std::string> open_;
  std::string text_;
  bool have_text_ = false;
  bool done_ = false;
  std::size_t line_ = 1;
  std::size_t col_ = 0;
  std::size_t peak_buffer_ = 0;
  std::vector<std::string> warnings_;
};

/// Replays a recorded event sequence; appends Eof if the sequence lacks it.
class VectorSource {
 public:
  explicit VectorSource(std::vector<XmlEvent> events) : events_(std::move(events)) {}
  XmlEvent next() {
    if (pos_ < events_.size()) return events_[pos_++];
    return XmlEvent::eof();
  }

 private:
  std::vector<XmlEvent> events_;
  std::size_t pos_ = 0;
};

/// Serializes events to XML text. Adjacent text events coalesce naturally.
/// An attribute event that arrives after element content has started cannot
/// be placed in a start tag and is written as an element of the same name.
class XmlWriter {
 public:
  explicit XmlWriter(std::ostream& out) : out_(out) {}

  void operator()(const XmlEvent& e) {
    switch (e.kind) {
      case EventKind::StartElement:
        close_start_tag();
        out_ << '<' << e.value;
        frames_.push_back({e.value, Frame::Element, true});
        break;
      case EventKind::StartAttribute:
        if (!frames_.empty() && frames_.back().kind == Frame::Element && frames_.back().open) {
          out_ << ' ' << e.value << "=\"";
          frames_.push_back({e.value, Frame::Attribute, false});
        } else {
          close_start_tag();
          out_ << '<' << e.value;
          frames_.push_back({e.value, Frame::Element, true});
        }
        break;
      case EventKind::Text:
        if (!frames_.empty() && frames_.back().kind == Frame::Attribute) {
          escape(e.value);
        } else {
          close_start_tag();
          escape(e.value);
        }
        break;
      case EventKind::End: {
        if (frames_.empty()) throw std::logic_error("XmlWriter: unbalanced End");
        Frame f = frames_.back();
        frames_.pop_back();
        if (f.kind == Frame::Attribute) {
          out_ << '"';
        } else if (f.open) {
          out_ << "/>";
        } else {
          out_ << "</" << f.name << '>';
        }
        break;
      }
      case EventKind::Eof:
        out_.flush();
        break;
    }
  }

 private:
  struct Frame {
    std::string name;
    enum Kind { Element, Attribute } kind;
    bool open;  // start tag not yet closed with '>'
  };

  void close_start_tag() {
    if (!frames_.empty() && frames_.back().kind == Frame::Element && frames_.back().open) {
      out_ << '>';
      frames_.back().open = false;
    }
  }

  void escape(std::string_view s) {
    for (char c : s) {
      switch (c) {
        case '&': out_ << "&amp;"; break;
        case '<': out_ << "&lt;"; break;
        case '>': out_ << "&gt;"; break;
        case '"': out_ << "&quot;"; break;
        default: out_ << c;
      }
    }
  }

  std::ostream& out_;
  std::vector<Frame> frames_;
};

template <class Source>
Forest build_forest(Source& src) {
  std::vector<Forest> stack(1);
  std::vector<Tree> open;
  while (true) {
    XmlEvent e = src.next();
    switch (e.kind) {
      case EventKind::StartElement:
      case EventKind::StartAttribute:
        open.push_back(Tree{std::move(e.value),
                            e.kind == EventKind::StartElement ? NodeKind::Element
                                                              : NodeKind::Attribute,
                            {}});
        stack.emplace_back();
        break;
      case EventKind::Text: {
        Forest& top = stack.back();
        if (!top.empty() && top.back().kind == NodeKind::Text)
          top.back().label += e.value;
        else
          top.push_back(text(std::move(e.value)));
        break;
      }
      case EventKind::End: {
        if (open.empty()) throw std::runtime_error("build_forest: unbalanced End event");
        Tree t = std::move(open.back());
        open.pop_back();
        t.children = std::move(stack.back());
        stack.pop_back();
        stack.back().push_back(std::move(t));
        break;
      }
      case EventKind::Eof:
        if (!open.empty())
          throw std::runtime_error("build_forest: Eof inside <" + open.back().label + ">");
        return std::move(stack.back());
    }
  }
}

template <class Sink>
void emit_forest(const Forest& f, Sink&& sink) {
  for (const Tree& t : f) {
    switch (t.kind) {
      case NodeKind::Text:
        sink(XmlEvent::text(t.label));
        continue;
      case NodeKind::Element:
        sink(XmlEvent::start(t.label));
        break;
      case NodeKind::Attribute:
        sink(XmlEvent::start_attribute(t.label));
        break;
    }
    emit_forest(t.children, sink);
    sink(XmlEvent::end());
  }
}

inline std::vector<XmlEvent> forest_events(const Forest& f) {
  std::vector<XmlEvent> out;
  emit_forest(f, [&](XmlEvent e) { out.push_back(std::move(e)); });
  out.push_back(XmlEvent::eof());
  return out;
}

inline std::vector<XmlEvent> read_events(std::string_view xml, ReaderOptions opts = {}) {
  std::istringstream in{std::string(xml)};
  XmlReader reader(in, opts);
  std::vector<XmlEvent> out;
  while (true) {
    out.push_back(reader.next());
    if (out.back().kind == EventKind::Eof) return out;
  }
}

inline Forest parse_xml(std::string_view xml, ReaderOptions opts = {}) {
  std::istringstream in{std::string(xml)};
  XmlReader reader(in, opts);
  return build_forest(reader);
}

inline std::string to_xml(const Forest& f) {
  std::ostringstream out;
  XmlWriter w(out);
  emit_forest(f, w);
  w(XmlEvent::eof());
  return out.str();
}

inline std::string to_xml(const std::vector<XmlEvent>& events) {
  std::ostringstream out;
  XmlWriter w(out);
  for (const XmlEvent& e : events) w(e);
  return out.str();
}

}  // namespace xqmft
