//! Chat-model front end: builds lint and Trojan-localization prompts, parses
//! free-text answers back into findings and reports, and talks to an
//! OpenAI-style chat-completion endpoint.
//!
//! Nothing in the core crate depends on this one; the deterministic engines
//! work without it.

mod parse;
mod prompt;
mod transport;

pub use parse::{
    parse_bug_response, parse_trojan_response, BugClaim, ParsedBugs, ParsedTrojan, UNCLASSIFIED,
};
pub use prompt::{
    build_lint_prompt, build_trojan_prompt, estimate_tokens, explain, render_report_summary, trojan_bundle,
    trim_log, ExampleLabel, FewShot, PromptBundle, PromptError, TrojanQuery, DEFAULT_TOKEN_BUDGET,
};
pub use transport::{complete, EndpointConfig, HttpTransport, StubTransport, Transport, TransportError};
