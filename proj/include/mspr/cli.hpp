#ifndef MSPR_CLI_HPP
#define MSPR_CLI_HPP

namespace mspr {

/// Entry point behind the mspr binary. Subcommands: simulate, fit, diagnose.
/// Returns 0 on success, 1 on validation errors, 2 on I/O errors.
int run_cli(int argc, const char* const* argv);

}  // namespace mspr

#endif  // MSPR_CLI_HPP
