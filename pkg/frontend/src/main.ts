import { mountConsole } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://127.0.0.1:8000";
const root = document.getElementById("console");
if (!root) {
  throw new Error("missing #console element");
}
mountConsole(root, baseUrl);
