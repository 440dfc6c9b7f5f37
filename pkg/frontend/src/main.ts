import { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import {
  renderAdmin,
  renderJobDetail,
  renderJobs,
  renderLogin,
  renderNewJob,
  renderProfile,
  type Shell,
} from "./views.js";

const TOKEN_KEY = "hashfleet.token";
const USER_KEY = "hashfleet.user";
const ROLE_KEY = "hashfleet.role";

const api = new ApiClient("");
let cleanup: (() => void) | null = null;

const shell: Shell = {
  api,
  role: sessionStorage.getItem(ROLE_KEY) ?? "user",
  username: sessionStorage.getItem(USER_KEY) ?? "",
  navigate(hash: string) {
    location.hash = hash;
  },
  wsUrl(jobId: string) {
    const scheme = location.protocol === "https:" ? "wss" : "ws";
    return `${scheme}://${location.host}/ws/ui?job=${encodeURIComponent(jobId)}` +
      `&token=${encodeURIComponent(api.token ?? "")}`;
  },
};

api.onUnauthorized = () => {
  // Stale or revoked token: drop it and force a fresh login.
  sessionStorage.removeItem(TOKEN_KEY);
  api.token = null;
  location.hash = "#/login";
};

function nav(): HTMLElement {
  const links: [string, string][] = [["#/jobs", "Jobs"], ["#/new", "New job"],
                                     ["#/profile", "Profile"]];
  if (shell.role === "admin") links.push(["#/admin", "Admin"]);
  const items = links.map(([href, label]) => {
    const a = el("a", { href }, [label]);
    if (location.hash.startsWith(href)) a.className = "active";
    return a;
  });
  const logout = el("a", { href: "#/login" }, ["Sign out"]);
  logout.addEventListener("click", () => {
    sessionStorage.clear();
    api.token = null;
  });
  return el("nav", {}, [el("span", { class: "brand" }, ["hashfleet"]), ...items,
                        el("span", { class: "spacer" }, []), logout]);
}

async function route(): Promise<void> {
  const root = document.getElementById("app")!;
  if (cleanup) {
    cleanup();
    cleanup = null;
  }
  const stored = sessionStorage.getItem(TOKEN_KEY);
  if (stored && !api.token) {
    api.token = stored;
    shell.username = sessionStorage.getItem(USER_KEY) ?? "";
    shell.role = sessionStorage.getItem(ROLE_KEY) ?? "user";
  }
  const hash = location.hash || "#/jobs";

  if (!api.token || hash === "#/login") {
    clear(root);
    renderLogin(root, api, (result) => {
      sessionStorage.setItem(TOKEN_KEY, result.token);
      sessionStorage.setItem(USER_KEY, result.username);
      sessionStorage.setItem(ROLE_KEY, result.role);
      shell.username = result.username;
      shell.role = result.role;
      location.hash = result.role === "admin" ? "#/admin" : "#/jobs";
      void route();
    });
    return;
  }

  clear(root);
  root.append(nav());
  const body = el("main", {});
  root.append(body);
  try {
    if (hash.startsWith("#/jobs/")) {
      cleanup = await renderJobDetail(body, shell, hash.slice("#/jobs/".length));
    } else if (hash === "#/new") {
      await renderNewJob(body, shell);
    } else if (hash === "#/profile") {
      await renderProfile(body, shell);
    } else if (hash === "#/admin") {
      await renderAdmin(body, shell);
    } else {
      await renderJobs(body, shell);
    }
  } catch (err) {
    body.append(el("div", { class: "error-banner" }, [String(err)]));
  }
}

window.addEventListener("hashchange", () => void route());
window.addEventListener("DOMContentLoaded", () => void route());
