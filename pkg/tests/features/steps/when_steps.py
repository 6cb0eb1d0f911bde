from behave import when


@when('I run the {command} command')
def step_run_command(context, command):
    """Run a scenario command against the stored scenario file"""
    context.result = context.cli.run(command, "--instance", str(context.scenario_path))


@when('I run the {command} command with the graph exported')
def step_run_with_graph(context, command):
    context.graph_path = context.workdir / "graph.csv"
    context.result = context.cli.run(
        command, "--instance", str(context.scenario_path), "--graph-csv", str(context.graph_path)
    )


@when('I run the oracle with the {method} method')
def step_run_oracle(context, method):
    context.result = context.cli.run("oracle", "--instance", str(context.scenario_path), "--method", method)


@when('I ask the oracle only whether the error can vanish')
def step_run_oracle_zero(context):
    context.result = context.cli.run("oracle", "--instance", str(context.scenario_path), "--zero-only")


@when('I run the demo {name}')
def step_run_demo(context, name):
    context.result = context.cli.run("demo", name)


@when('I list the demos')
def step_list_demos(context):
    context.result = context.cli.run("demo")


@when('I ask for the PBR condition at {deg:g} degrees with {n:d} copies')
def step_pbr_condition(context, deg, n):
    context.result = context.cli.run("pbr", "--theta", str(deg), "--unit", "deg", "--n", str(n))


@when('I ask for the minimal PBR copy count at {deg:g} degrees')
def step_pbr_minimal(context, deg):
    context.result = context.cli.run("pbr", "--theta", str(deg), "--unit", "deg")


@when('I sweep the PBR game over the angles {angles}')
def step_pbr_sweep(context, angles):
    degrees = [a.strip() for a in angles.split(",")]
    context.result = context.cli.run("pbr", "--sweep", *degrees)


@when('I run the batch file')
def step_run_batch(context):
    context.result = context.cli.run("batch", "--file", str(context.batch_path))


@when('I run the {command} command twice')
def step_run_twice(context, command):
    context.results = [
        context.cli.run(command, "--instance", str(context.scenario_path)),
        context.cli.run(command, "--instance", str(context.scenario_path)),
    ]
    context.result = context.results[-1]


@when('I run the {command} command writing the report to a file')
def step_run_to_file(context, command):
    context.report_path = context.workdir / "report.json"
    context.result = context.cli.run(command, "--instance", str(context.scenario_path), output=context.report_path)


@when('I run the oracle with its default method')
def step_run_oracle_default(context):
    context.result = context.cli.run("oracle", "--instance", str(context.scenario_path))
