#ifndef K2DYN_NIBBLE_VECTOR_HPP_
#define K2DYN_NIBBLE_VECTOR_HPP_

#include <cassert>
#include <cstdint>
#include <vector>

namespace k2dyn {

// Fixed-capacity array of 4-bit values, two per byte, low nibble first.
// The backing buffer is sized exactly for the configured capacity; growing
// or shrinking a block reallocates through set_capacity.
class NibbleVector {
 public:
  NibbleVector() = default;

  std::uint32_t size() const { return size_; }
  std::uint32_t capacity() const { return capacity_; }
  std::uint64_t byte_size() const { return bytes_.size(); }

  std::uint8_t get(std::uint32_t i) const {
    assert(i < size_);
    std::uint8_t b = bytes_[i >> 1];
    return (i & 1u) ? static_cast<std::uint8_t>(b >> 4)
                    : static_cast<std::uint8_t>(b & 0x0Fu);
  }

  void set(std::uint32_t i, std::uint8_t v) {
    assert(i < size_ && v < 16);
    std::uint8_t& b = bytes_[i >> 1];
    if (i & 1u) {
      b = static_cast<std::uint8_t>((b & 0x0Fu) | (v << 4));
    } else {
      b = static_cast<std::uint8_t>((b & 0xF0u) | v);
    }
  }

  void set_capacity(std::uint32_t nibbles) {
    assert(size_ <= nibbles);
    capacity_ = nibbles;
    bytes_.resize((nibbles + 1) / 2);
    bytes_.shrink_to_fit();
  }

  void push_back(std::uint8_t v) {
    assert(size_ < capacity_);
    ++size_;
    set(size_ - 1, v);
  }

  // Opens `count` slots at `pos` (values unspecified until set).
  void open_gap(std::uint32_t pos, std::uint32_t count) {
    assert(pos <= size_ && size_ + count <= capacity_);
    std::uint32_t old_size = size_;
    size_ += count;
    for (std::uint32_t i = old_size; i-- > pos;) {
      set(i + count, get_raw(i));
    }
  }

  void erase(std::uint32_t pos, std::uint32_t count = 1) {
    assert(pos + count <= size_);
    for (std::uint32_t i = pos; i + count < size_; ++i) {
      set(i, get(i + count));
    }
    size_ -= count;
  }

  void clear() { size_ = 0; }

 private:
  // get() without the size assertion, for use mid-shift.
  std::uint8_t get_raw(std::uint32_t i) const {
    std::uint8_t b = bytes_[i >> 1];
    return (i & 1u) ? static_cast<std::uint8_t>(b >> 4)
                    : static_cast<std::uint8_t>(b & 0x0Fu);
  }

  std::vector<std::uint8_t> bytes_;
  std::uint32_t size_ = 0;
  std::uint32_t capacity_ = 0;
};

}  // namespace k2dyn

#endif  // K2DYN_NIBBLE_VECTOR_HPP_
