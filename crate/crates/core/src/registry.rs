//! Name-keyed registries of interchangeable algorithm variants.

use crate::decomposition::{
    AutoLambda, AutoRule, CompanionLambda, DecompositionOptions, ExplicitRule, JordanLambda, LambdaConstruction,
    ShiftedRule, StablePoleRule, UniformRule,
};
use crate::analysis::{AutoRoute, CovarianceRoute, DenseRoute, StructuredRoute};
use crate::consensus::{BernoulliDrop, StaticStrategy, SyncParams, SyncStrategy};
use crate::error::{Error, Result};
use crate::simulator::{Alg1, Alg2, AutoVariant, EstimatorVariant};

pub type Factory<T, P> = fn(&P) -> Result<Box<T>>;

pub struct Registry<T: ?Sized, P> {
    kind: &'static str,
    entries: Vec<(&'static str, Factory<T, P>)>,
}

impl<T: ?Sized, P> Registry<T, P> {
    pub fn new(kind: &'static str) -> Self {
        Registry { kind, entries: Vec::new() }
    }

    pub fn register(mut self, name: &'static str, factory: Factory<T, P>) -> Self {
        self.entries.push((name, factory));
        self
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn get(&self, name: &str, params: &P) -> Result<Box<T>> {
        match self.entries.iter().find(|(n, _)| *n == name) {
            Some((_, f)) => f(params),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            }),
        }
    }
}

pub fn lambda_constructions() -> Registry<dyn LambdaConstruction, ()> {
    Registry::<dyn LambdaConstruction, ()>::new("Lambda construction")
        .register("companion", |_| Ok(Box::new(CompanionLambda) as _))
        .register("jordan", |_| Ok(Box::new(JordanLambda) as _))
        .register("auto", |_| Ok(Box::new(AutoLambda) as _))
}

pub fn pole_rules() -> Registry<dyn StablePoleRule, DecompositionOptions> {
    Registry::<dyn StablePoleRule, DecompositionOptions>::new("stable pole rule")
        .register("uniform", |_| Ok(Box::new(UniformRule) as _))
        .register("shifted", |_| Ok(Box::new(ShiftedRule::default()) as _))
        .register("explicit", |o| match &o.stable_poles {
            Some(p) => Ok(Box::new(ExplicitRule { poles: p.clone() }) as _),
            None => Err(Error::Config("pole rule `explicit` needs `stable_poles`".into())),
        })
        .register("auto", |_| Ok(Box::new(AutoRule) as _))
}

pub fn sync_strategies() -> Registry<dyn SyncStrategy, SyncParams> {
    Registry::<dyn SyncStrategy, SyncParams>::new("synchronization strategy")
        .register("static", |_| Ok(Box::new(StaticStrategy) as _))
        .register("bernoulli", |p| Ok(Box::new(BernoulliDrop::new(p.drop_prob, p.seed)?) as _))
}

pub fn estimator_variants() -> Registry<dyn EstimatorVariant, ()> {
    Registry::<dyn EstimatorVariant, ()>::new("estimator variant")
        .register("alg1", |_| Ok(Box::new(Alg1) as _))
        .register("alg2", |_| Ok(Box::new(Alg2) as _))
        .register("auto", |_| Ok(Box::new(AutoVariant) as _))
}

pub fn covariance_routes() -> Registry<dyn CovarianceRoute, ()> {
    Registry::<dyn CovarianceRoute, ()>::new("covariance route")
        .register("dense", |_| Ok(Box::new(DenseRoute) as _))
        .register("structured", |_| Ok(Box::new(StructuredRoute) as _))
        .register("auto", |_| Ok(Box::new(AutoRoute) as _))
}
