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

// Restricted CT-over-DNS: one IN TXT question and one IN TXT answer per UDP
// response, query name sth.<log>.ct.googleapis.com, and a byte ceiling on
// the whole message.

#ifndef CTGA_DNS_CODEC_H_
#define CTGA_DNS_CODEC_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctga/crypto.h"
#include "ctga/merkle_log.h"

namespace ctga {

inline constexpr uint16_t kDnsTypeTxt = 16;
inline constexpr uint16_t kDnsClassIn = 1;
inline constexpr size_t kDnsHeaderSize = 12;
inline constexpr size_t kMaxDnsLabelLength = 63;

struct DnsLimits {
  // Every name parse is a loop of at most this many labels.
  size_t max_labels = 8;
  // Upper bound on a whole response message.
  size_t response_threshold = 400;
};

// "sth.<log>.ct.googleapis.com"
std::string SthQueryName(std::string_view log_name);
// The <log> label if |name| has the STH query shape, otherwise nullopt.
std::optional<std::string> LogNameFromQuery(std::string_view name);

// "<tree_size>.<timestamp>.<b64 root>.<b64 signature>"
std::string EncodeSthTxt(const SignedTreeHead& sth);

enum class SthTextError {
  kNone,
  kFieldCount,
  kBadTreeSize,
  kBadTimestamp,
  kBadRootEncoding,
  kBadSignatureEncoding,
  kRootLength,
};
std::string_view SthTextErrorName(SthTextError error);

// Parses fields only; the signature is not checked here and log_id is left
// empty (the caller knows the log from the query name).
std::optional<SignedTreeHead> DecodeSthTxt(std::string_view text,
                                           SthTextError* error = nullptr);

enum class DnsReject {
  kNone,
  kShortRead,
  kNotResponse,
  kQdAnMismatch,
  kLabelBoundExceeded,
  kLabelTooLong,
  kCompressedName,
  kNotSthQuery,
  kWrongType,
  kWrongClass,
  kAnswerNameMismatch,
  kBadTxtRdata,
  kTrailingBytes,
  kOversized,
};
std::string_view DnsRejectName(DnsReject reject);

struct DnsSthMessage {
  uint16_t txid = 0;
  std::string query_name;
  uint16_t qd_count = 1;
  uint16_t an_count = 1;
  // The STH travels in the first TXT character-string; any further strings
  // are padding.
  std::string txt_payload;

  friend bool operator==(const DnsSthMessage&, const DnsSthMessage&) = default;
};

struct DnsParseResult {
  std::optional<DnsSthMessage> message;
  DnsReject reject = DnsReject::kNone;
  // Largest number of label iterations spent on any single name.
  size_t name_iterations = 0;
};

// Reads one uncompressed name at |*offset| and advances past it. At most
// limits.max_labels labels are consumed before the terminator must appear.
DnsReject ReadDnsName(ByteSpan bytes, size_t* offset, const DnsLimits& limits,
                      std::string* name, size_t* iterations);

// Total: never throws, every non-conforming input yields a reject reason.
DnsParseResult ParseDnsMessage(ByteSpan bytes, const DnsLimits& limits = {});

class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Builds a response answering sth.<log_name>... with EncodeSthTxt(sth).
// When |pad_to| is nonzero the TXT record is padded with filler strings so the
// message is exactly |pad_to| bytes. Throws SizeError if the message would
// exceed limits.response_threshold or cannot reach |pad_to| exactly, and
// std::invalid_argument for an invalid log name.
Bytes BuildSthResponse(std::string_view log_name, const SignedTreeHead& sth,
                       uint16_t txid, const DnsLimits& limits = {},
                       size_t pad_to = 0);

// Minimum size of a response for |payload_size| bytes of STH text.
size_t SthResponseSize(std::string_view log_name, size_t payload_size);

// Client side, used by the log server.
struct DnsQuery {
  uint16_t txid = 0;
  uint16_t flags = 0;
  std::string name;
  uint16_t qtype = 0;
  uint16_t qclass = 0;
};
Bytes BuildDnsQuery(std::string_view name, uint16_t txid,
                    uint16_t qtype = kDnsTypeTxt);
std::optional<DnsQuery> ParseDnsQuery(ByteSpan bytes,
                                      const DnsLimits& limits = {});
// RCODE 3 (NXDOMAIN) echoing the question.
Bytes BuildNameErrorResponse(const DnsQuery& query);

}  // namespace ctga

#endif  // CTGA_DNS_CODEC_H_
