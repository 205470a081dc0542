import { start } from "./app.js";

const baseUrl =
  (window as unknown as { EVENTCAST_API?: string }).EVENTCAST_API ??
  new URLSearchParams(window.location.search).get("api") ??
  "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app container");
void start(root, baseUrl);
