//! Name-keyed registries of interchangeable algorithm implementations.
//!
//! Each algorithm family (itemset miners, MAP solvers) exposes a trait and a
//! registry of constructors. The pipeline and the CLI pick an implementation
//! by name at runtime.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown {kind} `{name}` (available: {})", known.join(", "))]
pub struct UnknownStrategy {
    pub kind: &'static str,
    pub name: String,
    pub known: Vec<&'static str>,
}

type Constructor<T, P> = fn(&P) -> Box<T>;

struct Entry<T: ?Sized, P> {
    name: &'static str,
    aliases: &'static [&'static str],
    description: &'static str,
    construct: Constructor<T, P>,
}

pub struct Registry<T: ?Sized, P> {
    kind: &'static str,
    entries: Vec<Entry<T, P>>,
}

impl<T: ?Sized, P> Registry<T, P> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: Vec::new(),
        }
    }

    /// Panics if the name or an alias is already taken.
    pub fn register(
        &mut self,
        name: &'static str,
        aliases: &'static [&'static str],
        description: &'static str,
        construct: Constructor<T, P>,
    ) -> &mut Self {
        for key in std::iter::once(&name).chain(aliases) {
            assert!(self.lookup(key).is_none(), "{} `{key}` registered twice", self.kind);
        }
        self.entries.push(Entry {
            name,
            aliases,
            description,
            construct,
        });
        self
    }

    fn lookup(&self, key: &str) -> Option<&Entry<T, P>> {
        self.entries.iter().find(|e| e.name == key || e.aliases.contains(&key))
    }

    pub fn create(&self, name: &str, params: &P) -> Result<Box<T>, UnknownStrategy> {
        match self.lookup(name) {
            Some(e) => Ok((e.construct)(params)),
            None => Err(UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names(),
            }),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    /// Canonical name for a name or alias.
    pub fn resolve(&self, name: &str) -> Option<&'static str> {
        self.lookup(name).map(|e| e.name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    pub fn list(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.name, e.description)).collect()
    }
}

impl<T: ?Sized, P> fmt::Debug for Registry<T, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("entries", &self.names())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }

    struct Hello(String);

    impl Greeter for Hello {
        fn greet(&self) -> String {
            format!("hello {}", self.0)
        }
    }

    fn registry() -> Registry<dyn Greeter, String> {
        let mut r = Registry::new("greeter");
        r.register("hello", &["hi"], "says hello", |p: &String| -> Box<dyn Greeter> {
            Box::new(Hello(p.clone()))
        });
        r
    }

    #[test]
    fn creates_by_name_and_alias() {
        let r = registry();
        assert_eq!(r.create("hello", &"x".into()).unwrap().greet(), "hello x");
        assert_eq!(r.create("hi", &"y".into()).unwrap().greet(), "hello y");
        assert_eq!(r.resolve("hi"), Some("hello"));
    }

    #[test]
    fn unknown_name_lists_known() {
        let err = registry().create("bye", &String::new()).err().unwrap();
        assert_eq!(err.known, vec!["hello"]);
        assert!(err.to_string().contains("unknown greeter `bye`"));
    }

    #[test]
    #[should_panic(expected = "registered twice")]
    fn duplicate_registration_panics() {
        let mut r = registry();
        r.register("hi", &[], "dup", |p: &String| -> Box<dyn Greeter> {
            Box::new(Hello(p.clone()))
        });
    }
}
