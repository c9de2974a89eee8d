// Driving the command-line interface in-process, e.g. to produce
// plot-ready CSV from another program.
//
// ```text
// cargo run --example command_line
// ```

use busymax::cli::run;

fn main() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        ["busymax", "compare", "--lambda-grid", "0.9,0.99,0.999", "--k", "1", "--format", "text"],
        &mut out,
        &mut err,
    );
    print!("{}", String::from_utf8_lossy(&out));
    eprint!("{}", String::from_utf8_lossy(&err));
    println!("exit code {code}\n");

    let mut out = Vec::new();
    let code = run(["busymax", "expand", "--variance", "--order", "2"], &mut out, &mut err);
    print!("{}", String::from_utf8_lossy(&out));
    println!("exit code {code}");
}
