//! The bundled reference policy and suite.

pub const POLICY_TEXT: &str = include_str!("../reference/empiric.policy");
pub const SUITE_TEXT: &str = include_str!("../reference/suite.json");

pub fn policy() -> crate::Policy {
    crate::parse_policy(POLICY_TEXT).expect("bundled policy parses")
}

pub fn suite() -> crate::Suite {
    crate::parse_suite(SUITE_TEXT).expect("bundled suite parses")
}
