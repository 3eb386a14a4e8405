#pragma once

namespace tactex {

// Entry point behind the tactex binary. Subcommands: ingest, quilt, fit,
// assign-labels, bake, render. Returns 0 on success, 2 on CLI errors,
// 1 on runtime failures.
int cli_main(int argc, const char* const* argv);

}  // namespace tactex
