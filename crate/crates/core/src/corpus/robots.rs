/// Parsed robots.txt rules.
///
/// Group selection follows the usual convention: the group naming our agent
/// wins over `*`; within a group the longest matching pattern decides and
/// `Allow` wins ties. Patterns support `*` and a trailing `$`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Robots {
    groups: Vec<Group>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Group {
    agents: Vec<String>,
    rules: Vec<(bool, String)>,
}

impl Robots {
    pub fn parse(text: &str) -> Self {
        let mut groups: Vec<Group> = Vec::new();
        let mut in_agents = false;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            let Some((key, value)) = line.split_once(':') else {
                continue;
            };
            let value = value.trim();
            match key.trim().to_ascii_lowercase().as_str() {
                "user-agent" => {
                    if !in_agents {
                        groups.push(Group::default());
                    }
                    in_agents = true;
                    groups.last_mut().unwrap().agents.push(value.to_ascii_lowercase());
                }
                k @ ("allow" | "disallow") => {
                    in_agents = false;
                    if let Some(g) = groups.last_mut() {
                        // An empty Disallow allows everything.
                        if !value.is_empty() {
                            g.rules.push((k == "allow", value.to_string()));
                        }
                    }
                }
                _ => in_agents = false,
            }
        }
        Robots { groups }
    }

    /// Allows everything; used when a site has no robots.txt.
    pub fn allow_all() -> Self {
        Robots::default()
    }

    pub fn is_allowed(&self, agent: &str, path: &str) -> bool {
        let agent = agent.to_ascii_lowercase();
        let named = self
            .groups
            .iter()
            .filter(|g| g.agents.iter().any(|a| a != "*" && agent.contains(a.as_str())))
            .collect::<Vec<_>>();
        let chosen = if named.is_empty() {
            self.groups.iter().filter(|g| g.agents.iter().any(|a| a == "*")).collect()
        } else {
            named
        };
        let mut best: Option<(usize, bool)> = None;
        for (allow, pattern) in chosen.iter().flat_map(|g| g.rules.iter()) {
            if pattern_matches(pattern, path) {
                let len = pattern.len();
                best = match best {
                    Some((l, a)) if l > len || (l == len && a) => Some((l, a)),
                    _ => Some((len, *allow)),
                };
            }
        }
        best.is_none_or(|(_, allow)| allow)
    }
}

fn pattern_matches(pattern: &str, path: &str) -> bool {
    let (pattern, anchored) = match pattern.strip_suffix('$') {
        Some(p) => (p, true),
        None => (pattern, false),
    };
    let parts: Vec<&str> = pattern.split('*').collect();
    let Some(rest) = path.strip_prefix(parts[0]) else {
        return false;
    };
    if parts.len() == 1 {
        return !anchored || rest.is_empty();
    }
    let mut rest = rest;
    for (i, part) in parts[1..].iter().enumerate() {
        let last = i + 2 == parts.len();
        if last && anchored {
            return rest.ends_with(part);
        }
        match rest.find(part) {
            Some(pos) => rest = &rest[pos + part.len()..],
            None => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
User-agent: *
Disallow: /private/
Allow: /private/policy
Disallow: /*.pdf$

User-agent: polidiff
User-agent: other
Disallow: /
Allow: /privacy
";

    #[test]
    fn wildcard_group() {
        let r = Robots::parse(SAMPLE);
        assert!(r.is_allowed("somebot", "/"));
        assert!(!r.is_allowed("somebot", "/private/x"));
        assert!(r.is_allowed("somebot", "/private/policy.html"));
        assert!(!r.is_allowed("somebot", "/docs/a.pdf"));
        assert!(r.is_allowed("somebot", "/docs/a.pdf?x"));
    }

    #[test]
    fn named_group_overrides_wildcard() {
        let r = Robots::parse(SAMPLE);
        assert!(!r.is_allowed("polidiff/0.1", "/about"));
        assert!(r.is_allowed("polidiff/0.1", "/privacy-policy"));
    }

    #[test]
    fn empty_disallow_and_missing_file() {
        assert!(Robots::parse("User-agent: *\nDisallow:\n").is_allowed("x", "/a"));
        assert!(Robots::allow_all().is_allowed("x", "/a"));
    }

    #[test]
    fn allow_wins_equal_length_tie() {
        let r = Robots::parse("User-agent: *\nDisallow: /a\nAllow: /a\n");
        assert!(r.is_allowed("x", "/a"));
    }
}
