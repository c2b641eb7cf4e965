//! Name → constructor tables for environments and agents.

use serde_json::json;

use super::config::{NamedSpec, Params};
use super::HarnessError;
use crate::agents::{
    Agent, BeliefState, EtcAgent, EtcMode, Exploration, FixedPolicyAgent, QLearningAgent, RandomAgent,
};
use crate::crmdp::Crmdp;
use crate::envs::{
    absorbing, adversarial_class, gridworld, loop_crmdp, softmax_counterexample, AdversarialClass,
    AdversarialClassSpec, GridworldSpec, MemberKind,
};
use crate::quantiliser::{GeneralQuantiliser, SimpleQuantiliser, DEFAULT_POLICY_CAP};

pub const ENVIRONMENTS: &[&str] =
    &["gridworld-1g", "gridworld-2g", "gridworld-4g", "thm11", "softmax-ce", "loop4", "cirl-ex23", "absorbing", "json"];
pub const AGENTS: &[&str] =
    &["qlearn", "softmax", "quantile", "general-quantile", "etc-cr", "etc-rl", "stay", "random"];

/// A CRMDP ready to simulate, with whatever side information agents built
/// for it may need.
#[derive(Debug, Clone)]
pub struct Environment {
    pub name: String,
    pub crmdp: Crmdp,
    pub start: usize,
    /// The class (and the member being simulated) for `thm11`.
    pub class: Option<(AdversarialClass, usize)>,
}

pub fn build_environment(spec: &NamedSpec) -> Result<Environment, HarnessError> {
    let name = spec.name.as_str();
    let plain = |crmdp: Crmdp, start: usize| Environment { name: name.to_string(), crmdp, start, class: None };
    match name {
        "gridworld-1g" | "gridworld-2g" | "gridworld-4g" => {
            Params::new(name, &spec.params, &[])?;
            let goals = name.as_bytes()[10] - b'0';
            let g = gridworld(&GridworldSpec::layout(goals as usize)?)?;
            Ok(plain(g.crmdp, g.start))
        }
        "thm11" => {
            let p = Params::new(name, &spec.params, &["n_risky", "q", "safe_states", "member"])?;
            let mut cls_spec = AdversarialClassSpec::new(p.usize_or("n_risky", 8)?);
            cls_spec.q = p.usize_or("q", 2)?;
            cls_spec.safe_states = p.usize_or("safe_states", 0)?;
            let class = adversarial_class(&cls_spec)?;
            let member = match p.value("member") {
                None => planted_worst_index(&class),
                Some(v) if v.as_str() == Some("worst") => planted_worst_index(&class),
                Some(v) if v.as_str() == Some("reference") => 0,
                Some(v) => match v.as_u64() {
                    Some(i) if (i as usize) < class.members.len() => i as usize,
                    _ => {
                        return Err(HarnessError::Param {
                            owner: name.into(),
                            name: "member".into(),
                            reason: format!("expected \"worst\", \"reference\" or an index below {}", class.members.len()),
                        })
                    }
                },
            };
            let crmdp = class.members[member].crmdp.clone();
            Ok(Environment { name: name.to_string(), crmdp, start: 0, class: Some((class, member)) })
        }
        "softmax-ce" => {
            let p = Params::new(name, &spec.params, &["n", "eps"])?;
            Ok(plain(softmax_counterexample(p.usize_or("n", 10)?, p.f64_or("eps", 0.05)?)?, 0))
        }
        "loop4" => {
            Params::new(name, &spec.params, &[])?;
            Ok(plain(loop_crmdp(), 0))
        }
        "absorbing" => {
            let p = Params::new(name, &spec.params, &["reward"])?;
            Ok(plain(absorbing(p.f64_or("reward", 0.5)?)?, 0))
        }
        "json" => {
            let p = Params::new(name, &spec.params, &["path", "start"])?;
            let path = p.str_opt("path")?.ok_or_else(|| HarnessError::Param {
                owner: name.into(),
                name: "path".into(),
                reason: "required".into(),
            })?;
            Ok(plain(Crmdp::load(path)?, p.usize_or("start", 0)?))
        }
        "cirl-ex23" => Err(HarnessError::NotCrmdp(name.to_string())),
        other => Err(HarnessError::UnknownEnvironment(other.to_string())),
    }
}

fn planted_worst_index(class: &AdversarialClass) -> usize {
    let top = class.spec.n_risky - 1;
    class
        .members
        .iter()
        .position(|m| matches!(m.kind, MemberKind::Case2 { target, .. } if target == top))
        .expect("the worst member is always generated")
}

pub fn build_agent(spec: &NamedSpec, env: &Environment) -> Result<Box<dyn Agent>, HarnessError> {
    let name = spec.name.as_str();
    let m = &env.crmdp;
    let (n, k) = (m.n_states(), m.n_actions());
    match name {
        "qlearn" | "softmax" => {
            let allowed: &[&str] = if name == "qlearn" {
                &["alpha", "gamma", "epsilon", "q_init"]
            } else {
                &["alpha", "gamma", "beta", "temperature", "q_init"]
            };
            let p = Params::new(name, &spec.params, allowed)?;
            let exploration = if name == "qlearn" {
                Exploration::EpsilonGreedy { epsilon: p.f64_or("epsilon", 0.1)? }
            } else {
                match (p.f64_opt("beta")?, p.f64_opt("temperature")?) {
                    (Some(_), Some(_)) => {
                        return Err(HarnessError::Param {
                            owner: name.into(),
                            name: "beta".into(),
                            reason: "give either beta or temperature, not both".into(),
                        })
                    }
                    (_, Some(temperature)) => Exploration::Softmax { temperature },
                    (beta, None) => Exploration::softmax_beta(beta.unwrap_or(2.0)),
                }
            };
            let mut agent = QLearningAgent::new(n, k, p.f64_or("alpha", 0.1)?, p.f64_or("gamma", 0.9)?, exploration)?;
            if let Some(q0) = p.f64_opt("q_init")? {
                agent = agent.with_initial_value(q0)?;
            }
            Ok(Box::new(agent))
        }
        "quantile" => {
            let p = Params::new(name, &spec.params, &["delta"])?;
            Ok(Box::new(SimpleQuantiliser::new(m.dynamics().clone(), p.f64_req("delta")?)?))
        }
        "general-quantile" => {
            let p = Params::new(name, &spec.params, &["delta", "cap"])?;
            let cap = p.usize_or("cap", DEFAULT_POLICY_CAP as usize)? as u64;
            Ok(Box::new(GeneralQuantiliser::new(&m.observed_mdp(), p.f64_req("delta")?, cap)?))
        }
        "etc-cr" | "etc-rl" => {
            let p = Params::new(name, &spec.params, &["reference_weight", "prior"])?;
            let mode = if name == "etc-cr" { EtcMode::Cr } else { EtcMode::Rl };
            let belief = match &env.class {
                Some((class, _)) => {
                    let prior = match p.f64_list_opt("prior")? {
                        Some(prior) => prior,
                        None => class.reference_prior(p.f64_or("reference_weight", 0.9)?),
                    };
                    BeliefState::new(class.crmdps(), prior)?
                }
                None => BeliefState::uniform(vec![m.clone()])?,
            };
            Ok(Box::new(EtcAgent::new(belief, mode)?))
        }
        "stay" => {
            Params::new(name, &spec.params, &[])?;
            let d = m.dynamics();
            Ok(Box::new(FixedPolicyAgent::new((0..n).map(|s| d.stay_action(s).unwrap_or(0)).collect())))
        }
        "random" => {
            Params::new(name, &spec.params, &[])?;
            Ok(Box::new(RandomAgent::new(k)))
        }
        other => Err(HarnessError::UnknownAgent(other.to_string())),
    }
}

/// Human-readable description of an environment for `env dump`.
pub fn describe(env: &Environment) -> serde_json::Value {
    json!({
        "name": env.name,
        "states": env.crmdp.n_states(),
        "actions": env.crmdp.n_actions(),
        "start": env.start,
        "member": env.class.as_ref().map(|(_, i)| *i),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_crmdp_environment_builds() {
        for name in ENVIRONMENTS.iter().filter(|&&n| n != "json" && n != "cirl-ex23") {
            let env = build_environment(&NamedSpec::new(name)).unwrap();
            assert!(env.start < env.crmdp.n_states(), "{name}");
        }
        assert!(matches!(build_environment(&NamedSpec::new("cirl-ex23")), Err(HarnessError::NotCrmdp(_))));
        assert!(matches!(build_environment(&NamedSpec::new("nope")), Err(HarnessError::UnknownEnvironment(_))));
    }

    #[test]
    fn agents_build_on_the_gridworld() {
        let env = build_environment(&NamedSpec::new("gridworld-2g")).unwrap();
        for name in ["qlearn", "softmax", "etc-cr", "etc-rl", "stay", "random"] {
            build_agent(&NamedSpec::new(name), &env).unwrap();
        }
        build_agent(&NamedSpec::new("quantile").with("delta", 0.5), &env).unwrap();
        assert!(build_agent(&NamedSpec::new("quantile"), &env).is_err());
        assert!(build_agent(&NamedSpec::new("softmax").with("beta", 2).with("temperature", 0.5), &env).is_err());
    }

    #[test]
    fn thm11_defaults_to_the_planted_worst_member() {
        let env = build_environment(&NamedSpec::new("thm11")).unwrap();
        let (class, member) = env.class.as_ref().unwrap();
        assert_eq!(class.members[*member].kind, class.planted_worst().kind);
    }
}
