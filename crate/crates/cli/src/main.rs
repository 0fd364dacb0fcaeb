mod args;
mod commands;
mod record;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command, Format};
use crate::commands::{Fatal, KernelPoints};
use crate::record::emit;

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Monodromy(_) => "monodromy",
        Command::Weyl(_) => "weyl",
        Command::Resmatrix { .. } => "resmatrix",
        Command::Lres { .. } => "lres",
        Command::KernelInertia { .. } => "kernel-inertia",
        Command::Verify { .. } => "verify",
    }
}

fn format(cmd: &Command) -> Format {
    match cmd {
        Command::Monodromy(p) | Command::Weyl(p) => p.common.format,
        Command::Resmatrix { points, .. } | Command::Lres { points, .. } => points.common.format,
        Command::KernelInertia { common, .. } | Command::Verify { common } => common.format,
    }
}

fn run(cmd: &Command) -> Result<(Vec<record::Record>, bool), Fatal> {
    let ok = |records| Ok((records, true));
    match cmd {
        Command::Monodromy(p) => ok(commands::monodromy(p)?),
        Command::Weyl(p) => ok(commands::weyl(p)?),
        Command::Resmatrix { points, side } => ok(commands::resmatrix(points, *side)?),
        Command::Lres { points, pair } => ok(commands::lres(points, pair)?),
        Command::KernelInertia {
            common,
            lambda,
            grid,
            pair,
            points,
        } => {
            let pts = KernelPoints {
                lambda,
                grid: grid.as_ref(),
                random: *points,
            };
            ok(commands::kernel_inertia(common, pts, pair.as_deref())?)
        }
        Command::Verify { common } => commands::verify(common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let command = name(&cli.command);
    let fmt = format(&cli.command);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let (records, code) = match run(&cli.command) {
        Ok((records, true)) => (records, 0),
        Ok((records, false)) => (records, 2),
        Err(fatal) => {
            if let Some((_, record::Cell::Text(msg))) = fatal.record.0.iter().find(|(k, _)| *k == "message") {
                eprintln!("lres: {command}: {msg}");
            }
            (vec![fatal.record], fatal.code)
        }
    };
    match emit(&mut out, fmt, command, &records).and_then(|_| out.flush()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
        Err(e) => {
            eprintln!("lres: cannot write output: {e}");
            return ExitCode::from(1);
        }
        Ok(()) => {}
    }
    ExitCode::from(code)
}
