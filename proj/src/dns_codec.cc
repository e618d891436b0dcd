// Copyright 2026 The ctga Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctga/dns_codec.h"

#include <algorithm>
#include <charconv>

namespace ctga {

namespace {

constexpr std::string_view kSthLabel = "sth";
constexpr std::string_view kCtSuffix = "ct.googleapis.com";
constexpr uint16_t kResponseFlags = 0x8180;  // QR, RD, RA, NOERROR
constexpr uint16_t kQueryFlags = 0x0100;     // RD
constexpr uint32_t kAnswerTtl = 300;
constexpr size_t kMaxCharacterString = 255;

std::vector<std::string_view> Split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<uint64_t> ParseDecimal(std::string_view s) {
  if (s.empty() || s.size() > 20) return std::nullopt;
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

void Put16(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void Put32(Bytes& out, uint32_t v) {
  Put16(out, static_cast<uint16_t>(v >> 16));
  Put16(out, static_cast<uint16_t>(v));
}

void PutName(Bytes& out, std::string_view name) {
  if (name.empty()) {
    out.push_back(0);
    return;
  }
  for (std::string_view label : Split(name, '.')) {
    out.push_back(static_cast<uint8_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
  }
  out.push_back(0);
}

size_t NameWireSize(std::string_view name) { return name.size() + 2; }

// Bounds-checked big-endian reader.
class Reader {
 public:
  explicit Reader(ByteSpan data) : data_(data) {}

  bool Read8(uint8_t& v) {
    if (pos_ + 1 > data_.size()) return false;
    v = data_[pos_++];
    return true;
  }
  bool Read16(uint16_t& v) {
    if (pos_ + 2 > data_.size()) return false;
    v = static_cast<uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
    pos_ += 2;
    return true;
  }
  bool Read32(uint32_t& v) {
    uint16_t hi, lo;
    if (!Read16(hi) || !Read16(lo)) return false;
    v = static_cast<uint32_t>(hi) << 16 | lo;
    return true;
  }
  bool ReadBytes(size_t n, ByteSpan& out) {
    if (pos_ + n > data_.size()) return false;
    out = data_.subspan(pos_, n);
    pos_ += n;
    return true;
  }
  size_t remaining() const { return data_.size() - pos_; }
  size_t pos() const { return pos_; }

 private:
  ByteSpan data_;
  size_t pos_ = 0;
};

// At most limits.max_labels label iterations, then the terminator must follow.
DnsReject ReadName(Reader& r, const DnsLimits& limits, std::string& name,
                   size_t& iterations) {
  name.clear();
  iterations = 0;
  for (size_t i = 0; i < limits.max_labels; ++i) {
    uint8_t len;
    if (!r.Read8(len)) return DnsReject::kShortRead;
    if (len == 0) return DnsReject::kNone;
    ++iterations;
    if ((len & 0xc0) == 0xc0) return DnsReject::kCompressedName;
    if (len > kMaxDnsLabelLength) return DnsReject::kLabelTooLong;
    ByteSpan label;
    if (!r.ReadBytes(len, label)) return DnsReject::kShortRead;
    if (!name.empty()) name.push_back('.');
    name.append(label.begin(), label.end());
  }
  uint8_t terminator;
  if (!r.Read8(terminator)) return DnsReject::kShortRead;
  return terminator == 0 ? DnsReject::kNone : DnsReject::kLabelBoundExceeded;
}

}  // namespace

std::string SthQueryName(std::string_view log_name) {
  std::string out(kSthLabel);
  out.push_back('.');
  out.append(log_name);
  out.push_back('.');
  out.append(kCtSuffix);
  return out;
}

std::optional<std::string> LogNameFromQuery(std::string_view name) {
  auto labels = Split(name, '.');
  if (labels.size() != 5 || labels[0] != kSthLabel || labels[2] != "ct" ||
      labels[3] != "googleapis" || labels[4] != "com") {
    return std::nullopt;
  }
  if (!IsValidLogName(labels[1])) return std::nullopt;
  return std::string(labels[1]);
}

std::string EncodeSthTxt(const SignedTreeHead& sth) {
  std::string out = std::to_string(sth.tree_size);
  out.push_back('.');
  out.append(std::to_string(sth.timestamp));
  out.push_back('.');
  out.append(Base64Encode(sth.root_hash));
  out.push_back('.');
  out.append(Base64Encode(sth.signature));
  return out;
}

std::string_view SthTextErrorName(SthTextError error) {
  switch (error) {
    case SthTextError::kNone: return "none";
    case SthTextError::kFieldCount: return "field_count";
    case SthTextError::kBadTreeSize: return "bad_tree_size";
    case SthTextError::kBadTimestamp: return "bad_timestamp";
    case SthTextError::kBadRootEncoding: return "bad_root_encoding";
    case SthTextError::kBadSignatureEncoding: return "bad_signature_encoding";
    case SthTextError::kRootLength: return "root_length";
  }
  return "unknown";
}

std::optional<SignedTreeHead> DecodeSthTxt(std::string_view text,
                                           SthTextError* error) {
  auto fail = [error](SthTextError e) -> std::optional<SignedTreeHead> {
    if (error) *error = e;
    return std::nullopt;
  };
  auto fields = Split(text, '.');
  if (fields.size() != 4) return fail(SthTextError::kFieldCount);
  auto size = ParseDecimal(fields[0]);
  if (!size) return fail(SthTextError::kBadTreeSize);
  auto timestamp = ParseDecimal(fields[1]);
  if (!timestamp) return fail(SthTextError::kBadTimestamp);
  auto root = Base64Decode(fields[2]);
  if (!root) return fail(SthTextError::kBadRootEncoding);
  if (root->size() != kDigestSize) return fail(SthTextError::kRootLength);
  auto signature = Base64Decode(fields[3]);
  if (!signature) return fail(SthTextError::kBadSignatureEncoding);

  SignedTreeHead sth;
  sth.tree_size = *size;
  sth.timestamp = *timestamp;
  std::copy(root->begin(), root->end(), sth.root_hash.begin());
  sth.signature = std::move(*signature);
  if (error) *error = SthTextError::kNone;
  return sth;
}

std::string_view DnsRejectName(DnsReject reject) {
  switch (reject) {
    case DnsReject::kNone: return "none";
    case DnsReject::kShortRead: return "short_read";
    case DnsReject::kNotResponse: return "not_response";
    case DnsReject::kQdAnMismatch: return "qd_an_mismatch";
    case DnsReject::kLabelBoundExceeded: return "label_bound_exceeded";
    case DnsReject::kLabelTooLong: return "label_too_long";
    case DnsReject::kCompressedName: return "compressed_name";
    case DnsReject::kNotSthQuery: return "not_sth_query";
    case DnsReject::kWrongType: return "wrong_type";
    case DnsReject::kWrongClass: return "wrong_class";
    case DnsReject::kAnswerNameMismatch: return "answer_name_mismatch";
    case DnsReject::kBadTxtRdata: return "bad_txt_rdata";
    case DnsReject::kTrailingBytes: return "trailing_bytes";
    case DnsReject::kOversized: return "oversized";
  }
  return "unknown";
}

DnsReject ReadDnsName(ByteSpan bytes, size_t* offset, const DnsLimits& limits,
                      std::string* name, size_t* iterations) {
  if (*offset > bytes.size()) return DnsReject::kShortRead;
  Reader r(bytes.subspan(*offset));
  DnsReject result = ReadName(r, limits, *name, *iterations);
  *offset += r.pos();
  return result;
}

DnsParseResult ParseDnsMessage(ByteSpan bytes, const DnsLimits& limits) {
  DnsParseResult result;
  auto reject = [&result](DnsReject r) {
    result.message.reset();
    result.reject = r;
    return result;
  };
  if (bytes.size() > limits.response_threshold) return reject(DnsReject::kOversized);

  Reader r(bytes);
  DnsSthMessage msg;
  uint16_t flags, ns_count, ar_count;
  if (!r.Read16(msg.txid) || !r.Read16(flags) || !r.Read16(msg.qd_count) ||
      !r.Read16(msg.an_count) || !r.Read16(ns_count) || !r.Read16(ar_count)) {
    return reject(DnsReject::kShortRead);
  }
  if ((flags & 0x8000) == 0) return reject(DnsReject::kNotResponse);
  if (msg.qd_count != 1 || msg.an_count != 1) return reject(DnsReject::kQdAnMismatch);

  size_t iterations = 0;
  DnsReject name_result = ReadName(r, limits, msg.query_name, iterations);
  result.name_iterations = iterations;
  if (name_result != DnsReject::kNone) return reject(name_result);
  if (!LogNameFromQuery(msg.query_name)) return reject(DnsReject::kNotSthQuery);
  uint16_t qtype, qclass;
  if (!r.Read16(qtype) || !r.Read16(qclass)) return reject(DnsReject::kShortRead);
  if (qtype != kDnsTypeTxt) return reject(DnsReject::kWrongType);
  if (qclass != kDnsClassIn) return reject(DnsReject::kWrongClass);

  std::string answer_name;
  name_result = ReadName(r, limits, answer_name, iterations);
  result.name_iterations = std::max(result.name_iterations, iterations);
  if (name_result != DnsReject::kNone) return reject(name_result);
  if (answer_name != msg.query_name) return reject(DnsReject::kAnswerNameMismatch);
  uint16_t atype, aclass, rdlength;
  uint32_t ttl;
  if (!r.Read16(atype) || !r.Read16(aclass) || !r.Read32(ttl) ||
      !r.Read16(rdlength)) {
    return reject(DnsReject::kShortRead);
  }
  if (atype != kDnsTypeTxt) return reject(DnsReject::kWrongType);
  if (aclass != kDnsClassIn) return reject(DnsReject::kWrongClass);
  ByteSpan rdata;
  if (!r.ReadBytes(rdlength, rdata)) return reject(DnsReject::kShortRead);
  if (rdata.empty() || static_cast<size_t>(rdata[0]) + 1 > rdata.size()) {
    return reject(DnsReject::kBadTxtRdata);
  }
  msg.txt_payload.assign(rdata.begin() + 1, rdata.begin() + 1 + rdata[0]);
  // Remaining character-strings must tile the rdata exactly.
  for (size_t pos = 1 + rdata[0]; pos < rdata.size();) {
    pos += 1 + static_cast<size_t>(rdata[pos]);
    if (pos > rdata.size()) return reject(DnsReject::kBadTxtRdata);
  }
  if (r.remaining() != 0 || ns_count != 0 || ar_count != 0) {
    return reject(DnsReject::kTrailingBytes);
  }
  result.message = std::move(msg);
  return result;
}

size_t SthResponseSize(std::string_view log_name, size_t payload_size) {
  size_t name = NameWireSize(SthQueryName(log_name));
  return kDnsHeaderSize + name + 4 + name + 10 + 1 + payload_size;
}

Bytes BuildSthResponse(std::string_view log_name, const SignedTreeHead& sth,
                       uint16_t txid, const DnsLimits& limits, size_t pad_to) {
  if (!IsValidLogName(log_name)) {
    throw std::invalid_argument("invalid log name: " + std::string(log_name));
  }
  std::string payload = EncodeSthTxt(sth);
  if (payload.size() > kMaxCharacterString) {
    throw SizeError("STH text exceeds one TXT character-string");
  }
  size_t base = SthResponseSize(log_name, payload.size());
  size_t target = pad_to == 0 ? base : pad_to;
  if (target < base) throw SizeError("STH response does not fit padded size");
  if (target > limits.response_threshold) {
    throw SizeError("STH response of " + std::to_string(target) +
                    " bytes exceeds threshold " +
                    std::to_string(limits.response_threshold));
  }

  std::vector<std::string> strings = {payload};
  for (size_t extra = target - base; extra > 0;) {
    size_t len = std::min(extra - 1, kMaxCharacterString);
    strings.emplace_back(len, '0');
    extra -= 1 + len;
  }
  size_t rdlength = 0;
  for (const auto& s : strings) rdlength += 1 + s.size();

  std::string name = SthQueryName(log_name);
  Bytes out;
  out.reserve(target);
  Put16(out, txid);
  Put16(out, kResponseFlags);
  Put16(out, 1);
  Put16(out, 1);
  Put16(out, 0);
  Put16(out, 0);
  PutName(out, name);
  Put16(out, kDnsTypeTxt);
  Put16(out, kDnsClassIn);
  PutName(out, name);
  Put16(out, kDnsTypeTxt);
  Put16(out, kDnsClassIn);
  Put32(out, kAnswerTtl);
  Put16(out, static_cast<uint16_t>(rdlength));
  for (const auto& s : strings) {
    out.push_back(static_cast<uint8_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

Bytes BuildDnsQuery(std::string_view name, uint16_t txid, uint16_t qtype) {
  Bytes out;
  Put16(out, txid);
  Put16(out, kQueryFlags);
  Put16(out, 1);
  Put16(out, 0);
  Put16(out, 0);
  Put16(out, 0);
  PutName(out, name);
  Put16(out, qtype);
  Put16(out, kDnsClassIn);
  return out;
}

std::optional<DnsQuery> ParseDnsQuery(ByteSpan bytes, const DnsLimits& limits) {
  Reader r(bytes);
  DnsQuery q;
  uint16_t qd, an, ns, ar;
  if (!r.Read16(q.txid) || !r.Read16(q.flags) || !r.Read16(qd) ||
      !r.Read16(an) || !r.Read16(ns) || !r.Read16(ar)) {
    return std::nullopt;
  }
  if ((q.flags & 0x8000) != 0 || qd != 1 || an != 0) return std::nullopt;
  size_t iterations = 0;
  if (ReadName(r, limits, q.name, iterations) != DnsReject::kNone) {
    return std::nullopt;
  }
  if (!r.Read16(q.qtype) || !r.Read16(q.qclass)) return std::nullopt;
  return q;
}

Bytes BuildNameErrorResponse(const DnsQuery& query) {
  Bytes out;
  Put16(out, query.txid);
  Put16(out, kResponseFlags | 0x0003);
  Put16(out, 1);
  Put16(out, 0);
  Put16(out, 0);
  Put16(out, 0);
  PutName(out, query.name);
  Put16(out, query.qtype);
  Put16(out, query.qclass);
  return out;
}

}  // namespace ctga
