import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, plaintextFromHex } from "../src/api.js";

function fakeFetch(routes: Record<string, { status: number; body?: unknown }>) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fetchFn = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    const route = routes[`${init?.method ?? "GET"} ${url}`];
    if (!route) throw new Error(`no stub for ${init?.method} ${url}`);
    return {
      ok: route.status >= 200 && route.status < 300,
      status: route.status,
      statusText: String(route.status),
      json: async () => route.body,
    } as Response;
  };
  return { fetchFn, calls };
}

describe("api client", () => {
  it("sends the bearer token and parses payloads", async () => {
    const { fetchFn, calls } = fakeFetch({
      "GET /nodes": { status: 200, body: [{ agent_name: "pi" }] },
    });
    const api = new ApiClient("", fetchFn);
    api.token = "tok-1";
    const nodes = await api.nodes();
    expect(nodes[0].agent_name).toBe("pi");
    expect((calls[0].init?.headers as Record<string, string>).Authorization)
      .toBe("Bearer tok-1");
  });

  it("maps the uniform error body onto ApiError", async () => {
    const { fetchFn } = fakeFetch({
      "POST /jobs": { status: 422, body: { code: "empty_hashes",
                                           message: "no hashes submitted",
                                           field: "hashes" } },
    });
    const api = new ApiClient("", fetchFn);
    api.token = "t";
    const error = await api.submitJob({ algorithm: "md5",
                                        mode: { mode: "dictionary", wordlists: [] },
                                        node_ids: [] }).catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(422);
    expect(error.code).toBe("empty_hashes");
    expect(error.field).toBe("hashes");
  });

  it("fires onUnauthorized for stale tokens", async () => {
    const { fetchFn } = fakeFetch({
      "GET /stats/me": { status: 401, body: { code: "unauthorized",
                                              message: "expired" } },
    });
    const api = new ApiClient("", fetchFn);
    api.token = "stale";
    let kicked = false;
    api.onUnauthorized = () => { kicked = true; };
    await expect(api.myStats()).rejects.toBeInstanceOf(ApiError);
    expect(kicked).toBe(true);
  });

  it("stores the token from login", async () => {
    const { fetchFn } = fakeFetch({
      "POST /auth/login": { status: 200, body: { token: "fresh", user_id: "u",
                                                 username: "alice", role: "user" } },
    });
    const api = new ApiClient("", fetchFn);
    const result = await api.login("alice", "pw");
    expect(result.role).toBe("user");
    expect(api.token).toBe("fresh");
  });
});

describe("plaintext rendering", () => {
  it("shows printable ASCII and escapes the rest", () => {
    expect(plaintextFromHex(Buffer.from("pass12").toString("hex"))).toBe("pass12");
    expect(plaintextFromHex("00ff70")).toBe("\\x00\\xffp");
  });
});
