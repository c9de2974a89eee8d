//! Every example runs to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main();
            }
        }
    };
}

example!(distribution);
example!(lambert_routes);
example!(moments);
example!(expansions);
example!(lambert_expansions);
example!(simulation);
example!(special_numbers);
example!(series_algebra);
example!(command_line);
