import type {
  AdminStats,
  CrackedRow,
  JobStats,
  JobSubmission,
  NodeInfo,
  UserInfo,
  UserStats,
  WordlistInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public field?: string,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface LoginResult {
  token: string;
  user_id: string;
  username: string;
  role: string;
}

/** Thin REST client. A 401 anywhere funnels into onUnauthorized so the
 * shell can force a re-login with one hook. */
export class ApiClient {
  token: string | null = null;
  onUnauthorized: () => void = () => {};

  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const response = await this.fetchFn(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 204) return undefined as T;
    if (!response.ok) {
      let code = "error";
      let message = response.statusText;
      let field: string | undefined;
      try {
        const payload = await response.json();
        code = payload.code ?? code;
        message = payload.message ?? message;
        field = payload.field;
      } catch {
        // non-JSON error body; keep the status text
      }
      if (response.status === 401) this.onUnauthorized();
      throw new ApiError(response.status, code, message, field);
    }
    return (await response.json()) as T;
  }

  async login(username: string, password: string): Promise<LoginResult> {
    const out = await this.request<LoginResult>("POST", "/auth/login", {
      username,
      password,
    });
    this.token = out.token;
    return out;
  }

  nodes(): Promise<NodeInfo[]> {
    return this.request("GET", "/nodes");
  }

  wordlists(): Promise<WordlistInfo[]> {
    return this.request("GET", "/wordlists");
  }

  submitJob(submission: JobSubmission): Promise<{ job_id: string }> {
    return this.request("POST", "/jobs", submission);
  }

  jobs(): Promise<JobStats[]> {
    return this.request("GET", "/jobs");
  }

  job(jobId: string): Promise<JobStats> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  results(jobId: string): Promise<CrackedRow[]> {
    return this.request("GET", `/jobs/${jobId}/results`);
  }

  csvUrl(jobId: string): string {
    return `${this.base}/jobs/${jobId}/results.csv`;
  }

  myStats(): Promise<UserStats> {
    return this.request("GET", "/stats/me");
  }

  adminStats(): Promise<AdminStats> {
    return this.request("GET", "/admin/stats");
  }

  adminUsers(): Promise<UserInfo[]> {
    return this.request("GET", "/admin/users");
  }
}

export function plaintextFromHex(hex: string): string {
  let out = "";
  for (let i = 0; i + 1 < hex.length; i += 2) {
    const byte = parseInt(hex.slice(i, i + 2), 16);
    out += byte >= 0x20 && byte <= 0x7e ? String.fromCharCode(byte)
                                        : `\\x${hex.slice(i, i + 2)}`;
  }
  return out;
}
