#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ibac::sim {

/// Simulation time in nanoseconds.
using Time = std::int64_t;

inline Time from_us(double us) { return static_cast<Time>(us * 1000.0 + (us >= 0 ? 0.5 : -0.5)); }
inline double to_us(Time t) { return static_cast<double>(t) / 1000.0; }

/// Time-ordered queue. Equal timestamps pop by ascending node id, then in
/// insertion order.
template <typename Payload>
class EventQueue {
 public:
  struct Entry {
    Time time;
    int node;
    std::uint64_t seq;
    Payload payload;
  };

  void push(Time time, int node, Payload payload) {
    if (time < now_) throw std::logic_error("event scheduled in the past");
    heap_.push(Entry{time, node, next_seq_++, std::move(payload)});
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  Time top_time() const { return heap_.top().time; }
  Time now() const { return now_; }

  Entry pop() {
    Entry e = heap_.top();
    heap_.pop();
    now_ = e.time;
    return e;
  }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.node != b.node) return a.node > b.node;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  Time now_ = 0;
};

}  // namespace ibac::sim
