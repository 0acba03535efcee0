#pragma once

namespace hybrid_id {

/// Entry point behind the `hybrid-id` executable. Exit codes: 0 success,
/// 1 usage or configuration error, 2 data error, 3 solver failure.
int run_cli(int argc, char** argv);

} // namespace hybrid_id
