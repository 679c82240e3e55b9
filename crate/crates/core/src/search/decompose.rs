use super::{query_tokens, LanguageModelClient, SearchConfig, SearchError, SearchIndex, SearchResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionSource {
    Client,
    Recipe,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub sub_goals: Vec<String>,
    pub source: DecompositionSource,
    /// The client was configured but failed, so the offline path ran.
    pub degraded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_error: Option<String>,
}

/// Splits a request into shopping sub-goals. A configured client is
/// asked first; on failure, or without one, the recipe table is used,
/// and anything else passes through unchanged.
pub fn decompose(
    query: &str,
    config: &SearchConfig,
    client: Option<&dyn LanguageModelClient>,
    catalog_digest: &str,
) -> Result<Decomposition, SearchError> {
    let q = query_tokens(query);
    if q.is_empty() {
        return Err(SearchError::EmptyQuery);
    }
    let mut client_error = None;
    if let Some(c) = client {
        match c.decompose(query, catalog_digest) {
            Ok(goals) => {
                let goals: Vec<String> =
                    goals.into_iter().map(|g| g.trim().to_owned()).filter(|g| !query_tokens(g).is_empty()).collect();
                if !goals.is_empty() {
                    return Ok(Decomposition {
                        sub_goals: goals,
                        source: DecompositionSource::Client,
                        degraded: false,
                        client_error: None,
                    });
                }
                client_error = Some("client returned no sub-goals".to_owned());
            }
            Err(e) => client_error = Some(e.to_string()),
        }
    }
    let degraded = client_error.is_some();
    let hit = config
        .recipes
        .iter()
        .filter(|r| query_tokens(&r.dish).iter().all(|w| q.contains(w)))
        .max_by_key(|r| query_tokens(&r.dish).len());
    Ok(match hit {
        Some(r) => Decomposition {
            sub_goals: r.components.clone(),
            source: DecompositionSource::Recipe,
            degraded,
            client_error,
        },
        None => Decomposition {
            sub_goals: vec![query.trim().to_owned()],
            source: DecompositionSource::Identity,
            degraded,
            client_error,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubGoal {
    pub query: String,
    pub results: Vec<SearchResult>,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub query: String,
    pub source: DecompositionSource,
    pub degraded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_error: Option<String>,
    pub sub_goals: Vec<SubGoal>,
}

impl QueryPlan {
    /// Best result per resolved sub-goal.
    pub fn targets(&self) -> Vec<&SearchResult> {
        self.sub_goals.iter().filter_map(|g| g.results.first()).collect()
    }
}

/// Decomposes `query` and resolves every sub-goal against the index.
pub fn plan_query(
    index: &SearchIndex,
    query: &str,
    client: Option<&dyn LanguageModelClient>,
) -> Result<QueryPlan, SearchError> {
    let d = decompose(query, index.config(), client, index.digest())?;
    let sub_goals = d
        .sub_goals
        .iter()
        .map(|g| {
            let results = index.search(g)?;
            Ok(SubGoal { query: g.clone(), resolved: !results.is_empty(), results })
        })
        .collect::<Result<Vec<_>, SearchError>>()?;
    Ok(QueryPlan { query: query.trim().to_owned(), source: d.source, degraded: d.degraded, client_error: d.client_error, sub_goals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::tests::fixture;
    use crate::search::{ClientError, ClientMatch, MatchTier};

    struct Canned(Result<Vec<String>, String>);

    impl LanguageModelClient for Canned {
        fn decompose(&self, _q: &str, _d: &str) -> Result<Vec<String>, ClientError> {
            self.0.clone().map_err(ClientError::Transport)
        }
        fn match_products(&self, _q: &str, _d: &str) -> Result<Vec<ClientMatch>, ClientError> {
            Ok(vec![])
        }
    }

    #[test]
    fn biryani_has_four_resolved_goals() {
        let idx = fixture();
        let plan = plan_query(&idx, "biryani ingredients", None).unwrap();
        assert_eq!(plan.source, DecompositionSource::Recipe);
        assert_eq!(plan.sub_goals.len(), 4);
        assert!(plan.sub_goals.iter().all(|g| g.resolved), "{plan:#?}");
        let ids: Vec<_> = plan.targets().iter().map(|r| r.product_id().unwrap().to_owned()).collect();
        assert_eq!(ids, vec!["p4", "p3", "p6", "p5"]);
        assert!(plan.targets().iter().all(|r| r.tier == MatchTier::Exact));
    }

    #[test]
    fn plain_query_is_identity() {
        let d = decompose("  Toor Dal ", &SearchConfig::default(), None, "").unwrap();
        assert_eq!(d.sub_goals, vec!["Toor Dal"]);
        assert_eq!(d.source, DecompositionSource::Identity);
        assert!(!d.degraded);
    }

    #[test]
    fn client_used_when_healthy() {
        let c = Canned(Ok(vec!["ghee".into(), "  ".into(), "rice".into()]));
        let d = decompose("something fancy", &SearchConfig::default(), Some(&c), "").unwrap();
        assert_eq!(d.source, DecompositionSource::Client);
        assert_eq!(d.sub_goals, vec!["ghee", "rice"]);
    }

    #[test]
    fn client_failure_degrades() {
        let c = Canned(Err("timed out".into()));
        let d = decompose("biryani", &SearchConfig::default(), Some(&c), "").unwrap();
        assert!(d.degraded);
        assert_eq!(d.source, DecompositionSource::Recipe);
        assert!(d.client_error.unwrap().contains("timed out"));
    }

    #[test]
    fn unresolvable_sub_goal_is_explicit() {
        let plan = plan_query(&fixture(), "unicorn dust", None).unwrap();
        assert_eq!(plan.sub_goals.len(), 1);
        assert!(!plan.sub_goals[0].resolved);
    }
}
