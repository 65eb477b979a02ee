#pragma once

#include <string>
#include <vector>

#include "flowkit/model.hpp"

namespace flowkit {

/// Reference protocol models shipped with the toolkit. Builders are pure
/// and emit models in canonical declaration order, so print_canonical of a
/// built model reproduces the checked-in `.fm` file byte for byte.

/// Alternating-acknowledgment sender/receiver. The scenario injects
/// `frame_count` frames; the sender's outbox gate closes after each send
/// and reopens on acknowledgment.
Model build_stop_and_wait(int frame_count);

/// Three-way connection establishment, symmetric: either side can
/// initiate. Scenarios: "default" (Local initiates), "symmetric" (both).
Model build_handshake();

/// Connection lifecycle: segment construction, window-driven flow control
/// with the persist timer, establishment, and both termination flows with
/// their 2 x segment_lifetime timers. Scenarios: send_data, zero_window,
/// handshake, local_close, local_close_timeout, remote_close,
/// remote_close_timeout.
Model build_tcp();

/// Session-establishment handshake between Client and Server spheres.
/// The optional key-exchange and client-auth paths are present in the
/// model and selected per scenario; `with_server_key_exchange` /
/// `with_client_auth` pick which scenario the returned model lists first
/// (the full scenario set is always included).
Model build_ssl(bool with_server_key_exchange, bool with_client_auth);

struct CorpusEntry {
    std::string name;
    Model model;
};

/// All four corpus entries, in file order: handshake, ssl, stop_and_wait, tcp.
std::vector<CorpusEntry> corpus_entries();

}  // namespace flowkit
