use serde_json::{json, Value};

fn op(summary: &str, responses: &[(&str, &str)]) -> Value {
    let mut map = serde_json::Map::new();
    for (code, text) in responses {
        map.insert((*code).to_owned(), json!({ "description": text }));
    }
    json!({ "summary": summary, "responses": map })
}

fn with_body(mut operation: Value, schema: &str) -> Value {
    operation["requestBody"] = json!({
        "required": true,
        "content": { "application/json": { "schema": { "$ref": format!("#/components/schemas/{schema}") } } }
    });
    operation
}

fn id_param() -> Value {
    json!({ "name": "id", "in": "path", "required": true, "schema": { "type": "string" } })
}

/// OpenAPI 3 description served at `/spec`.
pub fn document() -> Value {
    let errors = [
        ("400", "invalid configuration"),
        ("404", "unknown session"),
        ("409", "joint limit violation"),
        ("422", "malformed body"),
    ];
    let mut create = with_body(
        op(
            "Create a session from a robot description",
            &[("201", "session created"), errors[0], errors[2], errors[3]],
        ),
        "RobotDescription",
    );
    create["requestBody"]["content"]["application/toml"] = json!({ "schema": { "type": "string" } });

    let mut patch = with_body(
        op(
            "Command new joint targets through the G-code path",
            &[("200", "move applied"), errors[0], errors[1], errors[2], errors[3]],
        ),
        "JointPatch",
    );
    patch["parameters"] = json!([id_param()]);

    let mut get = op("Full session state", &[("200", "session state"), errors[1]]);
    get["parameters"] = json!([id_param()]);

    let mut delete = op("Remove a session", &[("204", "removed"), errors[1]]);
    delete["parameters"] = json!([id_param()]);

    let mut fk = with_body(
        op(
            "Forward kinematics for a query configuration",
            &[("200", "FK solution"), errors[0], errors[1], errors[3]],
        ),
        "JointConfig",
    );
    fk["parameters"] = json!([id_param()]);

    let mut backbone = op(
        "Sampled centerline of the current configuration",
        &[("200", "backbone"), errors[0], errors[1]],
    );
    backbone["parameters"] = json!([
        id_param(),
        { "name": "ds", "in": "query", "required": false, "schema": { "type": "number" } }
    ]);

    let mut experiment = op(
        "Run an experiment: in-plane, out-of-plane, accuracy or tracking",
        &[("200", "experiment record"), errors[0], errors[1], errors[3]],
    );
    experiment["parameters"] = json!([
        id_param(),
        { "name": "kind", "in": "path", "required": true,
          "schema": { "type": "string", "enum": ["in-plane", "out-of-plane", "accuracy", "tracking"] } }
    ]);

    let mut events = op(
        "WebSocket stream of state events (close code 4404 for unknown sessions)",
        &[("101", "switching protocols")],
    );
    events["parameters"] = json!([id_param()]);

    let number_array = json!({ "type": "array", "items": { "type": "number" } });
    json!({
        "openapi": "3.0.3",
        "info": { "title": "ctr service", "version": env!("CARGO_PKG_VERSION") },
        "paths": {
            "/healthz": { "get": op("Liveness probe", &[("200", "ok")]) },
            "/spec": { "get": op("This document", &[("200", "OpenAPI JSON")]) },
            "/robots": { "post": create, "get": op("List session ids", &[("200", "ids")]) },
            "/robots/{id}": { "get": get, "delete": delete },
            "/robots/{id}/joints": { "patch": patch },
            "/robots/{id}/fk": { "post": fk },
            "/robots/{id}/backbone": { "get": backbone },
            "/robots/{id}/experiments/{kind}": { "post": experiment },
            "/robots/{id}/events": { "get": events }
        },
        "components": { "schemas": {
            "JointConfig": {
                "type": "object",
                "required": ["translations", "rotations"],
                "properties": { "translations": number_array, "rotations": number_array }
            },
            "JointPatch": {
                "type": "object",
                "properties": { "translations": number_array, "rotations": number_array }
            },
            "RobotDescription": {
                "type": "object",
                "required": ["tubes"],
                "properties": {
                    "name": { "type": "string" },
                    "tubes": { "type": "array", "items": { "type": "object" } },
                    "axes": { "type": "array", "items": { "type": "object" } },
                    "joints": { "$ref": "#/components/schemas/JointConfig" }
                }
            }
        }}
    })
}
