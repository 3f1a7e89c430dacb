#pragma once

// Synthetic documents and the benchmark harness.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "xqmft/compiler.hpp"
#include "xqmft/optimizer.hpp"
#include "xqmft/stream.hpp"
#include "xqmft/xml.hpp"

namespace xqmft {

struct CorpusQuery {
  const char* id;
  const char* text;
};

/// The benchmark programs, as printed.
inline const std::vector<CorpusQuery>& corpus() {
  static const std::vector<CorpusQuery> queries = {
      {"q01", R"(<query01>{
for $person in $input/site/people/person
               [./person_id/text()="person0"]
return $person/name/text()}</query01>)"},
      {"q02", R"(<query02>{
for $open_auction in /site/open_auctions/open_auction return
 <increase>{ for $increase in $open_auction/bidder/increase return
   <bid>{$increase/text()}</bid> }</increase>
}</query02>)"},
      {"q04", R"(<query04>{
for $b in $input/site/open_auctions/open_auction
          [./bidder[./personref/personref_person/text()="personXX"]
            /following-sibling::bidder/personref/personref_person
            /text()="personYY"]
return <history>{$b/reserve/text()}</history>}</query04>)"},
      {"q13", R"(<query13>{
for $item in $input/site/regions/australia/item
return <item><name>{$item/name/text()}</name>
             <description>{$item/description}</description></item>
}</query13>)"},
      {"q16", R"(<query16>{
for $closed_auction in $input/site/closed_auctions/closed_auction
                [./annotation/description/parlist/listitem/parlist
                  /listitem/text/emph/keyword/text()] return
  <person><id>{$closed_auction/seller/seller_person}</id></person>
}</query16>)"},
      {"q17", R"(<query17>{
for $person in $input/site/people/person[empty(./homepage/text())]
return <person><name>{$person/name/text()}</name></person>
}</query17>)"},
      {"double", R"(<double><r1>{$input/*}</r1>{$input/*}</double>)"},
      {"fourstar", R"(<fourstar>{$input//*//*//*//*}</fourstar>)"},
      {"deepdup", R"(<deepdup>{ for $x in $input/* return
 <r> { for $y in $x/* return <r1><r2>{$y}</r2>{$y}</r1> } </r>
}</deepdup>)"},
  };
  return queries;
}

inline const CorpusQuery& corpus_query(const std::string& id) {
  for (const CorpusQuery& q : corpus())
    if (id == q.id) return q;
  throw std::invalid_argument("unknown corpus query: " + id);
}

enum class Shape { XmarkLite, DeepChain, WideFlat };

inline Shape parse_shape(const std::string& s) {
  if (s == "xmark-lite") return Shape::XmarkLite;
  if (s == "deep-chain") return Shape::DeepChain;
  if (s == "wide-flat") return Shape::WideFlat;
  throw std::invalid_argument("unknown shape: " + s);
}

struct GenSpec {
  Shape shape = Shape::XmarkLite;
  /// Approximate node count (xmark-lite, wide-flat) or depth (deep-chain).
  std::size_t size = 1;
  std::uint64_t seed = 1;
};

namespace detail {

template <class Sink>
class DocWriter {
 public:
  explicit DocWriter(Sink& sink) : sink_(sink) {}
  void open(const std::string& name) {
    sink_(XmlEvent::start(name));
    ++nodes_;
  }
  void close() { sink_(XmlEvent::end()); }
  void text(const std::string& s) {
    sink_(XmlEvent::text(s));
    ++nodes_;
  }
  void leaf(const std::string& name, const std::string& s) {
    open(name);
    text(s);
    close();
  }
  std::size_t nodes() const { return nodes_; }

 private:
  Sink& sink_;
  std::size_t nodes_ = 0;
};

template <class Sink>
void gen_xmark_lite(const GenSpec& spec, Sink& sink) {
  std::mt19937_64 rng(spec.seed);
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  DocWriter w(sink);
  // Each section gets a quarter of the node budget, and at least one entry.
  const std::size_t quota = std::max<std::size_t>(spec.size / 4, 1);
  w.open("site");

  w.open("regions");
  w.open("australia");
  for (std::size_t start = w.nodes(), i = 0; i == 0 || w.nodes() - start < quota; ++i) {
    w.open("item");
    w.leaf("name", "item" + std::to_string(i));
    w.open("description");
    if (pick(2)) {
      w.open("parlist");
      w.open("listitem");
      w.leaf("text", "t" + std::to_string(pick(100)));
      w.close();
      w.close();
    } else {
      w.text("d" + std::to_string(pick(100)));
    }
    w.close();
    w.close();
  }
  w.close();
  w.close();

  w.open("people");
  for (std::size_t start = w.nodes(), i = 0; i == 0 || w.nodes() - start < quota; ++i) {
    w.open("person");
    w.leaf("person_id", "person" + std::to_string(i));
    w.leaf("name", "name" + std::to_string(i));
    if (pick(2)) w.leaf("homepage", "http://h/" + std::to_string(i));
    w.close();
  }
  w.close();

  w.open("open_auctions");
  for (std::size_t start = w.nodes(), i = 0; i == 0 || w.nodes() - start < quota; ++i) {
    w.open("open_auction");
    int bidders = 1 + pick(3);
    for (int b = 0; b < bidders; ++b) {
      w.open("bidder");
      w.open("personref");
      static const char* refs[] = {"personXX", "personYY", "person1"};
      w.leaf("personref_person", refs[pick(3)]);
      w.close();
      w.leaf("increase", std::to_string(1 + pick(50)));
      w.close();
    }
    w.leaf("reserve", std::to_string(100 + pick(900)));
    w.close();
  }
  w.close();

  w.open("closed_auctions");
  for (std::size_t start = w.nodes(), i = 0; i == 0 || w.nodes() - start < quota; ++i) {
    w.open("closed_auction");
    w.open("annotation");
    w.open("description");
    w.open("parlist");
    w.open("listitem");
    w.open("parlist");
    w.open("listitem");
    w.open("text");
    w.open("emph");
    w.open("keyword");
    if (pick(2)) w.text("k" + std::to_string(i));
    w.close();
    for (int k = 0; k < 8; ++k) w.close();
    w.open("seller");
    w.leaf("seller_person", "person" + std::to_string(pick(100)));
    w.close();
    w.close();
  }
  w.close();

  w.close();
}

template <class Sink>
void gen_deep_chain(const GenSpec& spec, Sink& sink) {
  DocWriter w(sink);
  const std::size_t depth = std::max<std::size_t>(spec.size, 1);
  for (std::size_t d = 1; d < depth; ++d) w.open("c");
  w.leaf("c", "leaf");
  for (std::size_t d = 1; d < depth; ++d) w.close();
}

template <class Sink>
void gen_wide_flat(const GenSpec& spec, Sink& sink) {
  std::mt19937_64 rng(spec.seed);
  DocWriter w(sink);
  w.open("r");
  const std::size_t n = std::max<std::size_t>(spec.size / 2, 1);
  for (std::size_t i = 0; i < n; ++i) w.leaf("e", std::to_string(rng() % 1000));
  w.close();
}

}  // namespace detail

/// Emits the document described by `spec` to `sink`, followed by Eof.
template <class Sink>
void generate_doc(const GenSpec& spec, Sink&& sink) {
  switch (spec.shape) {
    case Shape::XmarkLite: detail::gen_xmark_lite(spec, sink); break;
    case Shape::DeepChain: detail::gen_deep_chain(spec, sink); break;
    case Shape::WideFlat: detail::gen_wide_flat(spec, sink); break;
  }
  sink(XmlEvent::eof());
}

inline std::vector<XmlEvent> generate_events(const GenSpec& spec) {
  std::vector<XmlEvent> events;
  generate_doc(spec, [&](XmlEvent e) { events.push_back(std::move(e)); });
  return events;
}

inline std::size_t count_nodes(const std::vector<XmlEvent>& events) {
  std::size_t n = 0;
  for (const XmlEvent& e : events)
    n += e.kind == EventKind::StartElement || e.kind == EventKind::StartAttribute ||
         e.kind == EventKind::Text;
  return n;
}

struct BenchSpec {
  std::string query;
  GenSpec doc;
  int repetitions = 1;
  bool optimized = true;
};

struct BenchResult {
  std::string query;
  std::size_t nodes = 0;
  std::size_t input_bytes = 0;
  double ms = 0;
  std::size_t peak = 0;
  std::size_t out_bytes = 0;
};

inline std::string format_record(const BenchResult& r) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(3);
  s << "query=" << r.query << " nodes=" << r.nodes << " ms=" << r.ms << " peak=" << r.peak
    << " out_bytes=" << r.out_bytes;
  return s.str();
}

/// Streams the generated document through the compiled query; time is the
/// median over the repetitions.
inline BenchResult run_bench(const BenchSpec& spec) {
  Mft m = compile(parse_query(corpus_query(spec.query).text));
  if (spec.optimized) m = optimize(m);
  std::vector<XmlEvent> events = generate_events(spec.doc);
  BenchResult r;
  r.query = spec.query;
  r.nodes = count_nodes(events);
  r.input_bytes = to_xml(events).size();
  std::vector<double> times;
  for (int i = 0; i < std::max(spec.repetitions, 1); ++i) {
    VectorSource src(events);
    std::ostringstream out;
    XmlWriter writer(out);
    StreamStats st = stream_run(m, src, writer);
    times.push_back(st.ms);
    r.peak = st.peak_retained_nodes;
    r.out_bytes = out.str().size();
  }
  std::sort(times.begin(), times.end());
  r.ms = times[times.size() / 2];
  return r;
}

}  // namespace xqmft
