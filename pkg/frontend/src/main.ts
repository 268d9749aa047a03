import { AnnotatorApp } from "./app.js";

function workerId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("worker");
  if (fromQuery) {
    localStorage.setItem("ake-worker", fromQuery);
    return fromQuery;
  }
  const stored = localStorage.getItem("ake-worker");
  if (stored) return stored;
  const generated = `w-${Math.random().toString(36).slice(2, 10)}`;
  localStorage.setItem("ake-worker", generated);
  return generated;
}

const root = document.getElementById("app");
if (root) {
  void new AnnotatorApp(root, workerId()).start();
}
