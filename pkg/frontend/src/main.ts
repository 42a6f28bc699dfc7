import "./style.css";
import { mountApp } from "./app";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

mountApp(root).catch((err: unknown) => {
  root.textContent = `failed to start: ${err instanceof Error ? err.message : String(err)}`;
});
