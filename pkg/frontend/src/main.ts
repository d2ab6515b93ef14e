import { createApp } from "./app.js";

const root = document.querySelector<HTMLElement>("#app");
if (root) createApp(root);
